#include "ilab/dataset_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ilab {

namespace fs = std::filesystem;
using nlohmann::json;

ParseError::ParseError(std::string file, std::size_t line, const std::string& what)
    : ValidationError(file + ":" + std::to_string(line) + ": " + what), file_(std::move(file)), line_(line) {}

std::string format_real(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

struct CsvFile {
  std::string name;
  std::vector<std::string> header;
  // (line number, fields)
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

CsvFile read_csv(const fs::path& path) {
  CsvFile f;
  f.name = path.filename().string();
  std::ifstream in(path);
  if (!in) throw ParseError(f.name, 0, "missing file");
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.empty() || line == "\r") continue;
    if (f.header.empty()) {
      f.header = split(line);
      continue;
    }
    auto fields = split(line);
    if (fields.size() != f.header.size()) {
      throw ParseError(f.name, lineno,
                       "expected " + std::to_string(f.header.size()) + " fields, got " + std::to_string(fields.size()));
    }
    f.rows.emplace_back(lineno, std::move(fields));
  }
  if (f.header.empty()) throw ParseError(f.name, 1, "missing header");
  return f;
}

void expect_header(const CsvFile& f, const std::vector<std::string>& cols) {
  if (f.header.size() < cols.size() || !std::equal(cols.begin(), cols.end(), f.header.begin())) {
    std::string want;
    for (const auto& c : cols) want += (want.empty() ? "" : ",") + c;
    throw ParseError(f.name, 1, "header must start with " + want);
  }
}

long parse_int(const CsvFile& f, std::size_t line, const std::string& field, const std::string& what) {
  long v = 0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw ParseError(f.name, line, "non-integer " + what + " '" + field + "'");
  }
  return v;
}

double parse_real(const CsvFile& f, std::size_t line, const std::string& field, const std::string& what) {
  double v = 0;
  auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw ParseError(f.name, line, "non-numeric " + what + " '" + field + "'");
  }
  return v;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

ExperimentDataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ValidationError(dir.string() + ": not a dataset directory");

  ExperimentDataset d;

  json meta;
  {
    std::ifstream in(dir / "meta.json");
    if (!in) throw ParseError("meta.json", 0, "missing file");
    try {
      meta = json::parse(in);
    } catch (const json::exception& e) {
      throw ParseError("meta.json", 1, e.what());
    }
  }
  int T = 0;
  try {
    T = meta.at("n_periods").get<int>();
    d.pre_period_end = meta.at("pre_period_end").get<int>();
    d.treatments.design = design_from_string(meta.value("design", std::string("staggered")));
  } catch (const json::exception& e) {
    throw ParseError("meta.json", 1, e.what());
  }
  if (T < 1) throw ParseError("meta.json", 1, "n_periods must be >= 1");

  // units.csv: eligible ids define N.
  const CsvFile units = read_csv(dir / "units.csv");
  expect_header(units, {"unit_id", "eligible"});
  const std::size_t n_cov = units.header.size() - 2;
  for (std::size_t k = 0; k < n_cov; ++k) {
    if (units.header[2 + k] != "x_" + std::to_string(k + 1)) {
      throw ParseError(units.name, 1, "covariate columns must be x_1..x_k");
    }
  }
  std::map<long, bool> unit_eligible;
  std::map<long, std::vector<double>> unit_cov;
  for (const auto& [line, f] : units.rows) {
    const long id = parse_int(units, line, f[0], "unit_id");
    const long el = parse_int(units, line, f[1], "eligible");
    if (el != 0 && el != 1) throw ParseError(units.name, line, "eligible must be 0 or 1");
    if (!unit_eligible.emplace(id, el == 1).second) throw ParseError(units.name, line, "duplicate unit_id");
    if (el == 1 && n_cov > 0) {
      std::vector<double> x(n_cov);
      for (std::size_t k = 0; k < n_cov; ++k) x[k] = parse_real(units, line, f[2 + k], "covariate");
      unit_cov.emplace(id, std::move(x));
    }
  }
  long N = 0;
  for (const auto& [id, el] : unit_eligible) {
    if (!el) continue;
    ++N;
    if (id != N) throw ParseError(units.name, 0, "eligible unit ids must be 1..N, found " + std::to_string(id));
  }
  if (N == 0) throw ParseError(units.name, 0, "no eligible units");

  d.treatments.assignments = IntMatrix::Constant(N, T, -1);
  {
    const CsvFile tr = read_csv(dir / "treatments.csv");
    expect_header(tr, {"unit_id", "t", "w"});
    for (const auto& [line, f] : tr.rows) {
      const long id = parse_int(tr, line, f[0], "unit_id");
      const long t = parse_int(tr, line, f[1], "t");
      const long w = parse_int(tr, line, f[2], "w");
      if (id < 1 || id > N) throw ParseError(tr.name, line, "unit_id " + std::to_string(id) + " is not an eligible unit");
      if (t < 1 || t > T) throw ParseError(tr.name, line, "t " + std::to_string(t) + " outside 1.." + std::to_string(T));
      if (w != 0 && w != 1) throw ParseError(tr.name, line, "w must be 0 or 1");
      int& cell = d.treatments.assignments(id - 1, t - 1);
      if (cell != -1) throw ParseError(tr.name, line, "duplicate (unit_id,t)");
      cell = static_cast<int>(w);
    }
    for (long i = 0; i < N; ++i) {
      for (long t = 0; t < T; ++t) {
        if (d.treatments.assignments(i, t) == -1) {
          throw ParseError(tr.name, 0, "missing row for unit " + std::to_string(i + 1) + ", t " + std::to_string(t + 1));
        }
      }
    }
  }

  d.outcomes.outcomes = Matrix::Constant(N, T + 1, std::numeric_limits<double>::quiet_NaN());
  {
    const CsvFile oc = read_csv(dir / "outcomes.csv");
    expect_header(oc, {"unit_id", "t", "y"});
    std::vector<char> seen(static_cast<std::size_t>(N * (T + 1)), 0);
    for (const auto& [line, f] : oc.rows) {
      const long id = parse_int(oc, line, f[0], "unit_id");
      const long t = parse_int(oc, line, f[1], "t");
      const double y = parse_real(oc, line, f[2], "y");
      if (id < 1 || id > N) throw ParseError(oc.name, line, "unit_id " + std::to_string(id) + " is not an eligible unit");
      if (t < 0 || t > T) throw ParseError(oc.name, line, "t " + std::to_string(t) + " outside 0.." + std::to_string(T));
      char& s = seen[static_cast<std::size_t>((id - 1) * (T + 1) + t)];
      if (s) throw ParseError(oc.name, line, "duplicate (unit_id,t)");
      s = 1;
      d.outcomes.outcomes(id - 1, t) = y;
    }
    for (long i = 0; i < N; ++i) {
      for (long t = 0; t <= T; ++t) {
        if (!seen[static_cast<std::size_t>(i * (T + 1) + t)]) {
          throw ParseError(oc.name, 0, "missing row for unit " + std::to_string(i + 1) + ", t " + std::to_string(t));
        }
      }
    }
  }

  if (n_cov > 0) {
    UnitCovariates cov{Matrix(N, static_cast<Eigen::Index>(n_cov))};
    for (long i = 0; i < N; ++i) {
      const auto& x = unit_cov.at(i + 1);
      for (std::size_t k = 0; k < n_cov; ++k) cov.values(i, static_cast<Eigen::Index>(k)) = x[k];
    }
    d.covariates = std::move(cov);
  }

  if (fs::exists(dir / "graph.csv")) {
    const CsvFile gf = read_csv(dir / "graph.csv");
    expect_header(gf, {"treatment_unit_id", "connected_unit_id", "weight"});
    BipartiteGraph g;
    for (const auto& [id, el] : unit_eligible) g.treatment_units.push_back({static_cast<int>(id), el});
    std::set<int> connected;
    if (meta.contains("n_connected")) {
      const int c = meta["n_connected"].get<int>();
      for (int k = 1; k <= c; ++k) connected.insert(k);
    } else if (meta.contains("connected_units")) {
      for (int k : meta["connected_units"].get<std::vector<int>>()) connected.insert(k);
    }
    for (const auto& [line, f] : gf.rows) {
      Edge e;
      e.treatment_id = static_cast<int>(parse_int(gf, line, f[0], "treatment_unit_id"));
      e.connected_id = static_cast<int>(parse_int(gf, line, f[1], "connected_unit_id"));
      e.weight = parse_real(gf, line, f[2], "weight");
      if (!unit_eligible.count(e.treatment_id)) {
        throw ParseError(gf.name, line, "treatment unit " + std::to_string(e.treatment_id) + " not in units.csv");
      }
      connected.insert(e.connected_id);
      g.edges.push_back(e);
    }
    g.connected_units.assign(connected.begin(), connected.end());
    std::stable_sort(g.edges.begin(), g.edges.end(), [](const Edge& a, const Edge& b) {
      return std::pair(a.treatment_id, a.connected_id) < std::pair(b.treatment_id, b.connected_id);
    });
    d.graph = std::move(g);
  }

  auto violations = validate_dataset(d);
  if (!violations.empty()) {
    std::string msg = dir.string() + ": dataset violates invariants:";
    for (const auto& v : violations) msg += "\n  " + v.invariant + " at " + v.where;
    throw ValidationError(msg);
  }
  return d;
}

void save_dataset(const ExperimentDataset& d, const fs::path& dir) {
  auto violations = validate_dataset(d);
  if (!violations.empty()) {
    throw ValidationError("refusing to save invalid dataset: " + violations.front().invariant + " at " +
                          violations.front().where);
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  const Eigen::Index N = d.n_units();
  const int T = d.n_periods();
  const Eigen::Index n_cov = d.covariates ? d.covariates->values.cols() : 0;

  {
    std::ostringstream os;
    os << "unit_id,eligible";
    for (Eigen::Index k = 0; k < n_cov; ++k) os << ",x_" << (k + 1);
    os << '\n';
    std::vector<TreatmentUnit> units;
    if (d.graph) {
      units = d.graph->treatment_units;
      std::sort(units.begin(), units.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    } else {
      for (Eigen::Index i = 0; i < N; ++i) units.push_back({static_cast<int>(i + 1), true});
    }
    for (const auto& u : units) {
      os << u.id << ',' << (u.eligible ? 1 : 0);
      for (Eigen::Index k = 0; k < n_cov; ++k) {
        os << ',';
        if (u.eligible) os << format_real(d.covariates->values(u.id - 1, k));
      }
      os << '\n';
    }
    write_file(dir / "units.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "unit_id,t,w\n";
    for (Eigen::Index i = 0; i < N; ++i) {
      for (int t = 1; t <= T; ++t) os << (i + 1) << ',' << t << ',' << d.treatments.assignments(i, t - 1) << '\n';
    }
    write_file(dir / "treatments.csv", os.str());
  }
  {
    std::ostringstream os;
    os << "unit_id,t,y\n";
    for (Eigen::Index i = 0; i < N; ++i) {
      for (int t = 0; t <= T; ++t) os << (i + 1) << ',' << t << ',' << format_real(d.outcomes.outcomes(i, t)) << '\n';
    }
    write_file(dir / "outcomes.csv", os.str());
  }

  json meta;
  meta["n_periods"] = T;
  meta["pre_period_end"] = d.pre_period_end;
  meta["design"] = to_string(d.treatments.design);
  if (d.graph) {
    auto edges = d.graph->edges;
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
      return std::pair(a.treatment_id, a.connected_id) < std::pair(b.treatment_id, b.connected_id);
    });
    std::ostringstream os;
    os << "treatment_unit_id,connected_unit_id,weight\n";
    for (const auto& e : edges) os << e.treatment_id << ',' << e.connected_id << ',' << format_real(e.weight) << '\n';
    write_file(dir / "graph.csv", os.str());

    auto cids = d.graph->connected_units;
    std::sort(cids.begin(), cids.end());
    bool dense = true;
    for (std::size_t k = 0; k < cids.size(); ++k) dense = dense && cids[k] == static_cast<int>(k) + 1;
    if (dense) {
      meta["n_connected"] = cids.size();
    } else {
      meta["connected_units"] = cids;
    }
  } else {
    fs::remove(dir / "graph.csv", ec);
  }
  write_file(dir / "meta.json", meta.dump(2) + "\n");
}

}  // namespace ilab
