#include "mmflow/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <system_error>

namespace mmflow {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(const std::string& s) {
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::runtime_error("parse: bad number '" + s + "'");
  return v;
}

long parse_int(const std::string& s) {
  long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::runtime_error("parse: bad integer '" + s + "'");
  return v;
}

std::string next_token(std::istream& in, const char* what) {
  std::string tok;
  if (!(in >> tok)) throw std::runtime_error(std::string("parse: unexpected end of input reading ") + what);
  return tok;
}

Grid parse_header(std::istream& in, const std::string& tag) {
  const std::string got = next_token(in, "tag");
  if (got != tag) throw std::runtime_error("parse: expected '" + tag + "' header, got '" + got + "'");
  const long dim = parse_int(next_token(in, "dim"));
  if (dim != 2 && dim != 3) throw std::runtime_error("parse: dim must be 2 or 3");
  std::vector<int> shape;
  for (long k = 0; k < dim; ++k) shape.push_back(int(parse_int(next_token(in, "shape"))));
  const double h = parse_double(next_token(in, "h"));
  return Grid(int(dim), shape, h);
}

void write_header(std::ostream& out, const char* tag, const Grid& g) {
  out << tag << ' ' << g.dim();
  for (int s : g.shape()) out << ' ' << s;
  out << ' ' << format_double(g.h());
}

template <typename Get>
void write_rows(std::ostream& out, const Grid& g, Get&& get) {
  const int row = g.extent(g.dim() - 1);
  for (Index c = 0; c < g.cells(); ++c) {
    out << get(c);
    out << ((c + 1) % row == 0 ? '\n' : ' ');
  }
}

void expect_end(std::istream& in) {
  std::string extra;
  if (in >> extra) throw std::runtime_error("parse: trailing data after field values");
}

}  // namespace

std::string format_label_field(const LabelField& f) {
  std::ostringstream out;
  write_header(out, "MMLF", f.grid);
  out << ' ' << f.bounded_phases << '\n';
  write_rows(out, f.grid, [&](Index c) { return f.labels[c]; });
  return out.str();
}

std::string format_scalar_field(const ScalarField& f) {
  std::ostringstream out;
  write_header(out, "MMSF", f.grid);
  out << '\n';
  write_rows(out, f.grid, [&](Index c) { return format_double(f.values[c]); });
  return out.str();
}

LabelField parse_label_field(std::istream& in) {
  Grid g = parse_header(in, "MMLF");
  const long n = parse_int(next_token(in, "N"));
  if (n < 1) throw std::runtime_error("parse: N must be >= 1");
  Eigen::VectorXi labels(g.cells());
  for (Index c = 0; c < g.cells(); ++c) labels[c] = int(parse_int(next_token(in, "label")));
  expect_end(in);
  return LabelField(std::move(g), int(n), std::move(labels));
}

ScalarField parse_scalar_field(std::istream& in) {
  Grid g = parse_header(in, "MMSF");
  Eigen::VectorXd v(g.cells());
  for (Index c = 0; c < g.cells(); ++c) v[c] = parse_double(next_token(in, "value"));
  expect_end(in);
  return ScalarField(std::move(g), std::move(v));
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LabelField read_label_field(const fs::path& path) {
  std::istringstream in(read_text(path));
  return parse_label_field(in);
}

ScalarField read_scalar_field(const fs::path& path) {
  std::istringstream in(read_text(path));
  return parse_scalar_field(in);
}

void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_label_field(const fs::path& path, const LabelField& f) { write_atomic(path, format_label_field(f)); }
void write_scalar_field(const fs::path& path, const ScalarField& f) { write_atomic(path, format_scalar_field(f)); }

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

std::string lambda_name(double lambda) { return format_double(lambda); }
std::string time_name(double t) { return "t" + format_double(t); }

std::string hash_line(std::uint64_t config_hash) { return "# config " + hex64(config_hash) + "\n"; }

std::string series_csv(const FlowTrace& trace, std::optional<std::uint64_t> config_hash) {
  std::ostringstream out;
  if (config_hash) out << hash_line(*config_hash);
  out << "k,per_phi,force,dissipation,gap,accepted,repaired\n";
  for (const StepRecord& r : trace.series)
    out << r.k << ',' << format_double(r.per_phi) << ',' << format_double(r.force) << ','
        << format_double(r.dissipation) << ',' << format_double(r.report.duality_gap) << ','
        << int(r.report.accepted) << ',' << int(r.report.repaired) << '\n';
  return out.str();
}

std::string steps_csv(const FlowTrace& trace, std::optional<std::uint64_t> config_hash) {
  std::ostringstream out;
  if (config_hash) out << hash_line(*config_hash);
  out << "k,total,sym_diff,displacement,iterations,converged,repair_limit\n";
  for (const StepRecord& r : trace.series)
    out << r.k << ',' << format_double(r.report.total) << ',' << format_double(r.sym_diff) << ','
        << format_double(r.displacement) << ',' << r.report.iterations << ',' << int(r.report.converged) << ','
        << int(r.report.repair_limit) << '\n';
  return out.str();
}

void write_trace(const fs::path& dir, const FlowTrace& trace, std::optional<std::uint64_t> config_hash) {
  std::vector<bool> written(trace.frames.size(), false);
  for (std::size_t i = 0; i < trace.checkpoints.size(); ++i) {
    write_label_field(dir / (time_name(trace.checkpoints[i].first) + ".mmlf"), trace.at_checkpoint(i));
    written[std::size_t(trace.checkpoints[i].second)] = true;
  }
  for (std::size_t i = 0; i < trace.frames.size(); ++i)
    if (!written[i]) write_label_field(dir / "frames" / step_name(trace.frames[i].step), trace.frames[i].field);
  write_atomic(dir / "series.csv", series_csv(trace, config_hash));
  write_atomic(dir / "steps.csv", steps_csv(trace, config_hash));
}

std::string step_name(Index k) { return "k" + std::to_string(k) + ".mmlf"; }

namespace {

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(read_text(path));
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

FlowTrace read_trace(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a trace directory: " + dir.string());
  FlowTrace trace;
  trace.params.lambda = 1;
  for (const fs::path& name : {dir.filename(), dir.parent_path().filename()}) {
    try {
      trace.params.lambda = parse_double(name.string());
      break;
    } catch (const std::exception&) {
    }
  }
  std::vector<std::pair<double, fs::path>> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.path().extension() != ".mmlf" || name.size() < 6 || name[0] != 't') continue;
    files.emplace_back(parse_double(name.substr(1, name.size() - 6)), e.path());
  }
  if (files.empty()) throw std::runtime_error("no checkpoint files in " + dir.string());
  std::sort(files.begin(), files.end());
  std::map<Index, fs::path> by_step;
  for (const auto& [t, path] : files) by_step.emplace(trace.params.step_index(t), path);
  if (fs::is_directory(dir / "frames")) {
    trace.params.every_step = true;
    for (const auto& e : fs::directory_iterator(dir / "frames")) {
      const std::string name = e.path().filename().string();
      if (e.path().extension() != ".mmlf" || name.size() < 7 || name[0] != 'k') continue;
      by_step.emplace(Index(parse_int(name.substr(1, name.size() - 6))), e.path());
    }
  }
  for (const auto& [k, path] : by_step)
    trace.frames.push_back({k, double(k) / trace.params.lambda, read_label_field(path)});
  for (const auto& [t, path] : files) {
    const Index k = trace.params.step_index(t);
    Index idx = 0;
    for (std::size_t j = 0; j < trace.frames.size(); ++j)
      if (trace.frames[j].step <= k) idx = Index(j);
    trace.checkpoints.emplace_back(t, idx);
    trace.params.checkpoint_times.push_back(t);
  }
  trace.params.horizon = files.back().first;
  if (fs::exists(dir / "series.csv")) {
    for (const auto& row : read_csv(dir / "series.csv")) {
      if (row.size() < 7) throw std::runtime_error("series.csv: short row");
      StepRecord r;
      r.k = parse_int(row[0]);
      r.per_phi = parse_double(row[1]);
      r.force = parse_double(row[2]);
      r.dissipation = parse_double(row[3]);
      r.report.duality_gap = parse_double(row[4]);
      r.report.accepted = row[5] == "1";
      r.report.repaired = row[6] == "1";
      trace.series.push_back(r);
    }
  }
  if (fs::exists(dir / "steps.csv")) {
    const auto rows = read_csv(dir / "steps.csv");
    for (std::size_t i = 0; i < rows.size() && i < trace.series.size(); ++i) {
      if (rows[i].size() < 7) throw std::runtime_error("steps.csv: short row");
      StepRecord& r = trace.series[i];
      r.report.total = parse_double(rows[i][1]);
      r.sym_diff = parse_double(rows[i][2]);
      r.displacement = parse_double(rows[i][3]);
      r.report.iterations = int(parse_int(rows[i][4]));
      r.report.converged = rows[i][5] == "1";
      r.report.repair_limit = rows[i][6] == "1";
    }
  }
  return trace;
}

}  // namespace mmflow
