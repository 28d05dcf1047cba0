#include "mmflow/config.hpp"

#include "mmflow/io.hpp"

#include <json.hpp>

#include <cmath>
#include <numbers>

namespace mmflow {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ConfigError("config: " + msg); }

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(std::string("field '") + key + "' has the wrong type");
  }
}

const json& require(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) fail(where + ": missing '" + key + "'");
  return j.at(key);
}

Vec vec_of(const json& j, const std::string& what, int dim) {
  if (!j.is_array()) fail(what + " must be an array");
  Vec v(Eigen::Index(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(what + " must hold numbers");
    v[Eigen::Index(i)] = j[i].get<double>();
  }
  if (dim > 0 && v.size() != dim) fail(what + " must have " + std::to_string(dim) + " entries");
  return v;
}

Norm norm_of(const json& j, int dim, const std::string& where) {
  if (!j.is_object()) fail(where + ": norm entry must be an object");
  const std::string kind = get_or<std::string>(j, "kind", "euclidean");
  const std::string label = get_or<std::string>(j, "label", kind);
  Norm n;
  try {
    if (kind == "euclidean") {
      n = Norm::euclidean(dim, label);
    } else if (kind == "diagonal") {
      n = Norm::diagonal(vec_of(require(j, "weights", where), where + ".weights", dim), label);
    } else if (kind == "polyhedral") {
      const json& rows = require(j, "covectors", where);
      if (!rows.is_array() || rows.empty()) fail(where + ": covectors must be a non-empty array");
      Eigen::MatrixXd a(Eigen::Index(rows.size()), dim);
      for (std::size_t r = 0; r < rows.size(); ++r) a.row(Eigen::Index(r)) = vec_of(rows[r], where + ".covectors", dim);
      n = Norm::polyhedral(a, label);
    } else {
      fail(where + ": unknown norm kind '" + kind + "'");
    }
    if (j.contains("scale")) n = n.scaled(get_or<double>(j, "scale", 1.0));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    fail(where + ": " + e.what());
  }
  return n;
}

NormFamily family_of(const json& root, const char* list_key, const char* single_key, int phases, int dim,
                     FamilyRole role) {
  std::vector<Norm> members;
  if (root.contains(list_key)) {
    const json& list = root.at(list_key);
    if (!list.is_array()) fail(std::string(list_key) + " must be an array");
    if (int(list.size()) != phases)
      fail(std::string(list_key) + " must have N+1 = " + std::to_string(phases) + " entries");
    for (std::size_t i = 0; i < list.size(); ++i)
      members.push_back(norm_of(list[i], dim, std::string(list_key) + "[" + std::to_string(i) + "]"));
  } else {
    const Norm n = root.contains(single_key) ? norm_of(root.at(single_key), dim, single_key) : Norm::euclidean(dim);
    members.assign(std::size_t(phases), n);
  }
  try {
    return NormFamily(std::move(members), role);
  } catch (const std::invalid_argument& e) {
    fail(std::string(list_key) + ": " + e.what());
  }
}

Grid grid_of(const json& j) {
  const int dim = get_or<int>(j, "dim", 2);
  try {
    if (j.contains("shape")) {
      std::vector<int> shape = j.at("shape").get<std::vector<int>>();
      const double h = j.contains("h") ? get_or<double>(j, "h", 1.0) : get_or<double>(j, "side", 1.0) / shape.front();
      return Grid(dim, shape, h);
    }
    const int n = get_or<int>(j, "n", 64);
    if (n < 2) fail("grid.n must be >= 2");
    return Grid::cube(dim, n, get_or<double>(j, "side", 1.0));
  } catch (const ConfigError&) {
    throw;
  } catch (const json::exception&) {
    fail("grid.shape must be a list of integers");
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path q(p);
  return q.is_absolute() ? q : base / q;
}

Mask shape_mask(const json& s, const Grid& g, const NormFamily& phi) {
  const std::string type = get_or<std::string>(s, "type", "");
  const int d = g.dim();
  const Vec center = s.contains("center") ? vec_of(s.at("center"), "shape.center", d) : Vec::Zero(d);
  if (type == "disk") {
    return rasterize_disk(g, center, get_or<double>(s, "radius", 0.25));
  } else if (type == "square") {
    const json& half = require(s, "half", "square");
    const Vec hv = half.is_number() ? Vec::Constant(d, half.get<double>()) : vec_of(half, "square.half", d);
    return rasterize_box(g, center, hv);
  } else if (type == "wulff") {
    if (d != 2) fail("wulff shape needs dim 2");
    const int which = get_or<int>(s, "anisotropy", 1);
    if (which < 1 || which > phi.size()) fail("wulff.anisotropy out of range");
    const Norm n = s.contains("norm") ? norm_of(s.at("norm"), d, "wulff.norm") : phi[which - 1];
    const double radius = get_or<double>(s, "radius", 0.25);
    std::vector<Eigen::Vector2d> poly = wulff_boundary(n, get_or<int>(s, "vertices", 256));
    for (auto& p : poly) p = p * radius + Eigen::Vector2d(center[0], center[1]);
    return rasterize_polygon(g, poly);
  }
  fail("unknown shape type '" + type + "'");
}

LabelField initial_of(const json& j, const Grid& g, int bounded, const NormFamily& phi, const fs::path& base) {
  if (j.contains("file")) {
    LabelField f;
    try {
      f = read_label_field(resolve(base, get_or<std::string>(j, "file", "")));
    } catch (const std::exception& e) {
      fail(std::string("initial.file: ") + e.what());
    }
    if (!(f.grid == g)) fail("initial.file: grid does not match the configured grid");
    if (f.bounded_phases != bounded) fail("initial.file: N does not match 'phases'");
    return f;
  }
  const int ext = bounded + 1;
  Eigen::VectorXi labels = Eigen::VectorXi::Constant(g.cells(), ext);
  const json& shapes = require(j, "shapes", "initial");
  if (!shapes.is_array()) fail("initial.shapes must be an array");
  auto paint = [&](const Mask& m, int phase) {
    if (phase < 1 || phase > ext) fail("initial: shape phase out of range 1..N+1");
    for (Index c = 0; c < g.cells(); ++c)
      if (m[c]) labels[c] = phase;
  };
  for (const json& s : shapes) {
    const std::string type = get_or<std::string>(s, "type", "");
    if (type == "tricolor") {
      const Vec center = s.contains("center") ? vec_of(s.at("center"), "tricolor.center", g.dim()) : Vec::Zero(g.dim());
      const std::vector<int> ph = get_or<std::vector<int>>(s, "phases", {1, 2, 3});
      if (ph.size() != 3) fail("tricolor.phases must have three entries");
      for (int k = 0; k < 3; ++k)
        paint(rasterize_sector(g, center, get_or<double>(s, "radius", 0.3), k, get_or<double>(s, "angle", 0.0)),
              ph[std::size_t(k)]);
    } else if (type == "stripes") {
      const int axis = get_or<int>(s, "axis", 0);
      const double width = get_or<double>(s, "width", 0.1);
      const std::vector<int> ph = get_or<std::vector<int>>(s, "phases", {1, 2});
      if (axis < 0 || axis >= g.dim() || !(width > 0) || ph.empty()) fail("stripes: bad axis, width or phases");
      const double offset = get_or<double>(s, "offset", 0.0);
      for (Index c = 0; c < g.cells(); ++c) {
        const double x = g.center(c)[axis] - offset;
        const long band = long(std::floor(x / width));
        const long m = long(ph.size());
        const int phase = ph[std::size_t(((band % m) + m) % m)];
        if (phase < 1 || phase > ext) fail("stripes: phase out of range 1..N+1");
        labels[c] = phase;
      }
    } else {
      paint(shape_mask(s, g, phi), get_or<int>(s, "phase", 1));
    }
  }
  return LabelField(g, bounded, std::move(labels));
}

Forcing forcing_of(const json& root, const Grid& g, int phases, const fs::path& base) {
  if (!root.contains("forcing")) return Forcing::zero(g, phases);
  const json& j = root.at("forcing");
  const std::string kind = get_or<std::string>(j, "kind", "none");
  Forcing f = Forcing::zero(g, phases);
  f.support_radius = get_or<double>(j, "radius", 0.0);
  if (kind == "none") return f;
  if (kind == "file") {
    const std::vector<std::string> files = get_or<std::vector<std::string>>(j, "files", {});
    if (int(files.size()) != phases) fail("forcing.files must list N+1 scalar fields");
    for (int i = 0; i < phases; ++i) {
      try {
        f.fields[std::size_t(i)] = read_scalar_field(resolve(base, files[std::size_t(i)]));
      } catch (const std::exception& e) {
        fail(std::string("forcing.files: ") + e.what());
      }
    }
    return f;
  }
  const Vec values = vec_of(require(j, "values", "forcing"), "forcing.values", phases);
  for (int i = 0; i < phases; ++i) {
    auto& v = f.fields[std::size_t(i)].values;
    for (Index c = 0; c < g.cells(); ++c) {
      if (kind == "constant")
        v[c] = values[i];
      else if (kind == "radial")
        v[c] = g.center(c).norm() <= f.support_radius ? values[i] : 0.0;
      else
        fail("unknown forcing kind '" + kind + "'");
    }
  }
  return f;
}

}  // namespace

Mask rasterize_disk(const Grid& g, const Vec& center, double radius) {
  Mask m(g.cells());
  for (Index c = 0; c < g.cells(); ++c) m[c] = (g.center(c) - center).norm() <= radius;
  return m;
}

Mask rasterize_box(const Grid& g, const Vec& center, const Vec& half) {
  Mask m(g.cells());
  for (Index c = 0; c < g.cells(); ++c) m[c] = ((g.center(c) - center).cwiseAbs().array() <= half.array()).all();
  return m;
}

Mask rasterize_polygon(const Grid& g, const std::vector<Eigen::Vector2d>& poly) {
  Mask m(g.cells());
  const std::size_t k = poly.size();
  for (Index c = 0; c < g.cells(); ++c) {
    const Vec x = g.center(c);
    bool inside = false;
    for (std::size_t i = 0, j = k - 1; i < k; j = i++) {
      const auto& a = poly[i];
      const auto& b = poly[j];
      if ((a.y() > x[1]) != (b.y() > x[1]) && x[0] < (b.x() - a.x()) * (x[1] - a.y()) / (b.y() - a.y()) + a.x())
        inside = !inside;
    }
    m[c] = inside;
  }
  return m;
}

Mask rasterize_sector(const Grid& g, const Vec& center, double radius, int k, double angle) {
  Mask m(g.cells());
  const double third = 2 * std::numbers::pi / 3;
  for (Index c = 0; c < g.cells(); ++c) {
    const Vec x = g.center(c) - center;
    if (x.norm() > radius) {
      m[c] = false;
      continue;
    }
    double a = std::atan2(x[1], x[0]) - angle + third / 2;
    a -= 2 * std::numbers::pi * std::floor(a / (2 * std::numbers::pi));
    m[c] = int(std::floor(a / third)) % 3 == k;
  }
  return m;
}

FlowParams RunConfig::flow_params(double lambda) const {
  FlowParams p;
  p.lambda = lambda;
  p.horizon = horizon;
  p.checkpoint_times = checkpoints.empty() ? std::vector<double>{0.0, horizon} : checkpoints;
  p.solver = solver;
  p.every_step = every_step;
  return p;
}

RunConfig parse_config(const std::string& text, const fs::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) fail("top level must be an object");
  RunConfig cfg;
  cfg.hash = fnv1a(text);
  cfg.name = get_or<std::string>(root, "name", "run");
  cfg.grid = grid_of(root.contains("grid") ? root.at("grid") : json::object());
  const int bounded = get_or<int>(root, "phases", 1);
  if (bounded < 1) fail("phases (N) must be >= 1");
  const int phases = bounded + 1;
  const int dim = cfg.grid.dim();
  cfg.model.anisotropies = family_of(root, "anisotropies", "anisotropy", phases, dim, FamilyRole::Anisotropies);
  cfg.model.mobilities = family_of(root, "mobilities", "mobility", phases, dim, FamilyRole::Mobilities);
  cfg.model.forcing = forcing_of(root, cfg.grid, phases, base_dir);
  try {
    cfg.model.forcing.validate(cfg.grid, phases);
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  cfg.initial = initial_of(require(root, "initial", "config"), cfg.grid, bounded, cfg.model.anisotropies, base_dir);

  const json flow = root.contains("flow") ? root.at("flow") : json::object();
  if (flow.contains("lambda")) {
    const json& l = flow.at("lambda");
    cfg.lambdas = l.is_array() ? get_or<std::vector<double>>(flow, "lambda", {}) : std::vector<double>{l.get<double>()};
  }
  if (cfg.lambdas.empty()) fail("flow.lambda must not be empty");
  cfg.horizon = get_or<double>(flow, "horizon", 0.0);
  cfg.checkpoints = get_or<std::vector<double>>(flow, "checkpoints", {});
  cfg.every_step = get_or<bool>(flow, "every_step", false);

  const json solver = root.contains("solver") ? root.at("solver") : json::object();
  cfg.solver.gap_tol = get_or<double>(solver, "gap_tol", 0.0);
  cfg.solver.max_iters = get_or<int>(solver, "max_iters", cfg.solver.max_iters);
  cfg.solver.check_every = get_or<int>(solver, "check_every", cfg.solver.check_every);

  const json step = root.contains("step") ? root.at("step") : json::object();
  cfg.oracle = get_or<bool>(step, "oracle", false);
  cfg.oracle_max_cells = get_or<int>(step, "max_cells", 20);

  for (double l : cfg.lambdas) {
    try {
      cfg.flow_params(l).validate();
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }

  if (root.contains("compare")) {
    const json& c = root.at("compare");
    CompareSpec spec;
    spec.phase = get_or<int>(c, "phase", 1);
    spec.seed = shape_mask(require(c, "seed", "compare"), cfg.grid, cfg.model.anisotropies);
    try {
      validate_comparison(cfg.initial, spec.seed, spec.phase, cfg.model);
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
    cfg.compare = std::move(spec);
  }

  const json diag = root.contains("diagnostics") ? root.at("diagnostics") : json::object();
  cfg.diagnostics.radii = get_or<std::vector<double>>(diag, "radii", {});
  cfg.diagnostics.p = get_or<double>(diag, "p", 0.0);
  if (cfg.diagnostics.p != 0 && !(cfg.diagnostics.p > dim)) fail("diagnostics.p must exceed the dimension");
  cfg.diagnostics.gmm_threshold = get_or<double>(diag, "gmm_threshold", cfg.diagnostics.gmm_threshold);
  cfg.diagnostics.holder_min = get_or<double>(diag, "holder_min", cfg.diagnostics.holder_min);
  cfg.diagnostics.inclusion_max = get_or<double>(diag, "inclusion_max", cfg.diagnostics.inclusion_max);
  cfg.diagnostics.monotone_tol = get_or<double>(diag, "monotone_tol", cfg.diagnostics.monotone_tol);
  cfg.diagnostics.ells = get_or<std::vector<double>>(diag, "ells", {});

  cfg.out_dir = get_or<std::string>(root, "output", "out/" + cfg.name);
  cfg.seed = get_or<std::uint64_t>(root, "seed", 0);
  cfg.threads = std::max(1, get_or<int>(root, "threads", 1));
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const std::exception& e) {
    fail(e.what());
  }
  return parse_config(text, path.parent_path());
}

}  // namespace mmflow
