#include "ilab/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace ilab {

Json to_json(const EffectEstimate& e) {
  Json j;
  j["method"] = to_string(e.method);
  j["point"] = e.point;
  j["ci_low"] = e.ci_low;
  j["ci_high"] = e.ci_high;
  j["significant_5pct"] = e.significant_5pct;
  j["n_bootstrap"] = e.n_bootstrap;
  j["metadata"] = Json::object();
  for (const auto& [k, v] : e.metadata) j["metadata"][k] = v;
  j["warnings"] = e.warnings;
  return j;
}

EffectEstimate estimate_from_json(const Json& j) {
  try {
    EffectEstimate e;
    e.method = method_from_string(j.at("method").get<std::string>());
    e.point = j.at("point").get<double>();
    e.ci_low = j.at("ci_low").get<double>();
    e.ci_high = j.at("ci_high").get<double>();
    e.significant_5pct = j.at("significant_5pct").get<bool>();
    e.n_bootstrap = j.value("n_bootstrap", 0);
    if (j.contains("metadata")) {
      for (const auto& [k, v] : j.at("metadata").items()) e.metadata[k] = v.get<std::string>();
    }
    if (j.contains("warnings")) e.warnings = j.at("warnings").get<std::vector<std::string>>();
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw ValidationError(std::string("malformed estimate: ") + ex.what());
  } catch (const std::invalid_argument& ex) {
    throw ValidationError(std::string("malformed estimate: ") + ex.what());
  }
}

namespace bench {

namespace {

Json summary_json(const MethodSummary& s) {
  Json j;
  j["method"] = to_string(s.method);
  j["n_ok"] = s.n_ok;
  j["failures"] = s.failures;
  j["mean"] = s.mean;
  j["sd"] = s.sd;
  j["bias"] = s.bias;
  j["bias_se"] = s.bias_se;
  j["mean_abs_bias"] = s.mean_abs_bias;
  j["positive_rate"] = s.positive_rate;
  j["significance_rate"] = s.significance_rate;
  j["coverage_rate"] = s.coverage_rate;
  j["exceeds_truth_rate"] = s.exceeds_truth_rate;
  j["sign_match_truth_rate"] = s.sign_match_truth_rate;
  j["expected_bias_match_rate"] = s.expected_bias_match_rate ? Json(*s.expected_bias_match_rate) : Json(nullptr);
  return j;
}

Json replicate_json(const ReplicateRecord& r) {
  Json j;
  j["replicate"] = r.replicate;
  j["seed"] = r.seed;
  j["truth"] = r.truth;
  Json est = Json::object();
  for (std::size_t k = 0; k < kMethods.size(); ++k) {
    const auto& e = r.estimates[k];
    est[to_string(kMethods[k])] =
        e ? Json{{"point", e->point}, {"ci_low", e->ci_low}, {"ci_high", e->ci_high}, {"significant", e->significant_5pct}}
          : Json(nullptr);
  }
  j["estimates"] = est;
  j["errors"] = r.errors;
  return j;
}

const char* const kRateFields[] = {"positive_rate",      "significance_rate",     "coverage_rate",
                                   "exceeds_truth_rate", "sign_match_truth_rate"};
const char* const kRealFields[] = {"mean", "sd", "bias", "bias_se", "mean_abs_bias"};

}  // namespace

Json to_json(const BenchReport& r) {
  Json j;
  j["schema"] = kReportSchema;
  j["scenarios"] = Json::array();
  for (const auto& s : r.scenarios) {
    Json sj;
    sj["name"] = s.name;
    sj["config"] = s.config;
    sj["replicates"] = s.replicates;
    sj["truth"] = {{"mean", s.truth_mean}, {"sd", s.truth_sd}};
    sj["methods"] = Json::array();
    for (const auto& m : s.methods) sj["methods"].push_back(summary_json(m));
    Json names = Json::array();
    for (Method m : kMethods) names.push_back(to_string(m));
    Json matrix = Json::array();
    for (Eigen::Index a = 0; a < s.sign_agreement.rows(); ++a) {
      Json row = Json::array();
      for (Eigen::Index b = 0; b < s.sign_agreement.cols(); ++b) row.push_back(s.sign_agreement(a, b));
      matrix.push_back(row);
    }
    sj["sign_agreement"] = {{"methods", names}, {"matrix", matrix}};
    sj["bias_direction"] = {
        {"expected", s.expected_bias_sign ? Json(to_string(*s.expected_bias_sign)) : Json(nullptr)},
        {"basic_rate", s.expected_bias_sign ? Json(s.basic_bias_match_rate) : Json(nullptr)},
        {"verdict", s.verdict}};
    sj["replicate_log"] = Json::array();
    for (const auto& rec : s.log) sj["replicate_log"].push_back(replicate_json(rec));
    j["scenarios"].push_back(sj);
  }
  return j;
}

std::vector<std::string> validate_report_json(const Json& j) {
  std::vector<std::string> out;
  auto need = [&](const Json& obj, const char* key, bool (Json::*is)() const, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key) || !(obj.at(key).*is)()) {
      out.push_back(where + "." + key + " missing or mistyped");
      return false;
    }
    return true;
  };
  if (!j.is_object()) return {"report must be an object"};
  if (!j.contains("schema") || j.at("schema") != kReportSchema) out.emplace_back("schema must be 1");
  if (!need(j, "scenarios", &Json::is_array, "report")) return out;

  const std::size_t n_methods = kMethods.size();
  for (std::size_t i = 0; i < j.at("scenarios").size(); ++i) {
    const Json& s = j.at("scenarios")[i];
    const std::string w = "scenarios[" + std::to_string(i) + "]";
    if (!s.is_object()) {
      out.push_back(w + " must be an object");
      continue;
    }
    need(s, "name", &Json::is_string, w);
    need(s, "config", &Json::is_object, w);
    need(s, "replicates", &Json::is_number_integer, w);
    if (need(s, "truth", &Json::is_object, w)) {
      need(s.at("truth"), "mean", &Json::is_number, w + ".truth");
      need(s.at("truth"), "sd", &Json::is_number, w + ".truth");
    }
    if (need(s, "methods", &Json::is_array, w)) {
      if (s.at("methods").size() != n_methods) out.push_back(w + ".methods must list three methods");
      for (std::size_t k = 0; k < s.at("methods").size(); ++k) {
        const Json& m = s.at("methods")[k];
        const std::string mw = w + ".methods[" + std::to_string(k) + "]";
        if (need(m, "method", &Json::is_string, mw) && k < n_methods && m.at("method") != to_string(kMethods[k])) {
          out.push_back(mw + ".method out of order");
        }
        need(m, "n_ok", &Json::is_number_integer, mw);
        need(m, "failures", &Json::is_number_integer, mw);
        for (const char* f : kRealFields) need(m, f, &Json::is_number, mw);
        for (const char* f : kRateFields) {
          if (need(m, f, &Json::is_number, mw)) {
            const double v = m.at(f).get<double>();
            if (!(v >= 0.0 && v <= 1.0)) out.push_back(mw + "." + f + " outside [0,1]");
          }
        }
        if (!m.is_object() || !m.contains("expected_bias_match_rate")) {
          out.push_back(mw + ".expected_bias_match_rate missing");
        } else if (const Json& v = m.at("expected_bias_match_rate"); !v.is_null()) {
          if (!v.is_number() || v.get<double>() < 0.0 || v.get<double>() > 1.0) {
            out.push_back(mw + ".expected_bias_match_rate outside [0,1]");
          }
        }
      }
    }
    if (need(s, "sign_agreement", &Json::is_object, w)) {
      const Json& sa = s.at("sign_agreement");
      need(sa, "methods", &Json::is_array, w + ".sign_agreement");
      if (need(sa, "matrix", &Json::is_array, w + ".sign_agreement")) {
        const Json& mx = sa.at("matrix");
        bool shape = mx.size() == n_methods;
        for (const auto& row : mx) shape = shape && row.is_array() && row.size() == n_methods;
        if (!shape) {
          out.push_back(w + ".sign_agreement.matrix must be 3x3");
        } else {
          for (std::size_t a = 0; a < n_methods; ++a) {
            for (std::size_t b = 0; b < n_methods; ++b) {
              const Json& v = mx[a][b];
              if (!v.is_number() || v.get<double>() < 0.0 || v.get<double>() > 1.0) {
                out.push_back(w + ".sign_agreement.matrix entries must lie in [0,1]");
              } else if (a == b && v.get<double>() != 1.0) {
                out.push_back(w + ".sign_agreement.matrix diagonal must be 1");
              } else if (mx[b][a] != v) {
                out.push_back(w + ".sign_agreement.matrix must be symmetric");
              }
            }
          }
        }
      }
    }
    if (need(s, "bias_direction", &Json::is_object, w)) {
      const Json& bd = s.at("bias_direction");
      need(bd, "verdict", &Json::is_string, w + ".bias_direction");
      if (!bd.contains("expected") || !bd.contains("basic_rate")) out.push_back(w + ".bias_direction incomplete");
    }
    if (need(s, "replicate_log", &Json::is_array, w)) {
      for (std::size_t r = 0; r < s.at("replicate_log").size(); ++r) {
        const Json& rec = s.at("replicate_log")[r];
        const std::string rw = w + ".replicate_log[" + std::to_string(r) + "]";
        need(rec, "replicate", &Json::is_number_integer, rw);
        need(rec, "seed", &Json::is_number_unsigned, rw);
        need(rec, "truth", &Json::is_number, rw);
        need(rec, "errors", &Json::is_array, rw);
        if (!need(rec, "estimates", &Json::is_object, rw)) continue;
        for (Method m : kMethods) {
          const std::string name = to_string(m);
          if (!rec.at("estimates").contains(name)) {
            out.push_back(rw + ".estimates." + name + " missing");
            continue;
          }
          const Json& e = rec.at("estimates").at(name);
          if (e.is_null()) continue;
          const std::string ew = rw + ".estimates." + name;
          need(e, "point", &Json::is_number, ew);
          need(e, "ci_low", &Json::is_number, ew);
          need(e, "ci_high", &Json::is_number, ew);
          need(e, "significant", &Json::is_boolean, ew);
        }
      }
    }
  }
  return out;
}

BenchReport report_from_json(const Json& j) {
  const auto problems = validate_report_json(j);
  if (!problems.empty()) throw ValidationError("report does not match schema 1: " + problems.front());
  BenchReport r;
  for (const Json& sj : j.at("scenarios")) {
    ScenarioReport s;
    s.name = sj.at("name").get<std::string>();
    s.config = sj.at("config");
    s.replicates = sj.at("replicates").get<int>();
    s.truth_mean = sj.at("truth").at("mean").get<double>();
    s.truth_sd = sj.at("truth").at("sd").get<double>();
    for (std::size_t k = 0; k < kMethods.size(); ++k) {
      const Json& m = sj.at("methods")[k];
      MethodSummary ms;
      ms.method = kMethods[k];
      ms.n_ok = m.at("n_ok").get<int>();
      ms.failures = m.at("failures").get<int>();
      ms.mean = m.at("mean").get<double>();
      ms.sd = m.at("sd").get<double>();
      ms.bias = m.at("bias").get<double>();
      ms.bias_se = m.at("bias_se").get<double>();
      ms.mean_abs_bias = m.at("mean_abs_bias").get<double>();
      ms.positive_rate = m.at("positive_rate").get<double>();
      ms.significance_rate = m.at("significance_rate").get<double>();
      ms.coverage_rate = m.at("coverage_rate").get<double>();
      ms.exceeds_truth_rate = m.at("exceeds_truth_rate").get<double>();
      ms.sign_match_truth_rate = m.at("sign_match_truth_rate").get<double>();
      if (!m.at("expected_bias_match_rate").is_null()) {
        ms.expected_bias_match_rate = m.at("expected_bias_match_rate").get<double>();
      }
      s.methods.push_back(ms);
    }
    const auto n = static_cast<Eigen::Index>(kMethods.size());
    s.sign_agreement.resize(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < n; ++b) {
        s.sign_agreement(a, b) = sj.at("sign_agreement").at("matrix")[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)].get<double>();
      }
    }
    const Json& bd = sj.at("bias_direction");
    if (!bd.at("expected").is_null()) {
      s.expected_bias_sign = bd.at("expected") == "positive" ? BiasSign::positive : BiasSign::negative;
      s.basic_bias_match_rate = bd.at("basic_rate").get<double>();
    }
    s.verdict = bd.at("verdict").get<std::string>();
    for (const Json& rj : sj.at("replicate_log")) {
      ReplicateRecord rec;
      rec.replicate = rj.at("replicate").get<int>();
      rec.seed = rj.at("seed").get<std::uint64_t>();
      rec.truth = rj.at("truth").get<double>();
      rec.errors = rj.at("errors").get<std::vector<std::string>>();
      for (std::size_t k = 0; k < kMethods.size(); ++k) {
        const Json& e = rj.at("estimates").at(to_string(kMethods[k]));
        if (e.is_null()) continue;
        EffectEstimate est;
        est.method = kMethods[k];
        est.point = e.at("point").get<double>();
        est.ci_low = e.at("ci_low").get<double>();
        est.ci_high = e.at("ci_high").get<double>();
        est.significant_5pct = e.at("significant").get<bool>();
        rec.estimates[k] = est;
      }
      s.log.push_back(std::move(rec));
    }
    r.scenarios.push_back(std::move(s));
  }
  return r;
}

ReportFormat format_from_string(const std::string& s) {
  if (s == "json") return ReportFormat::json;
  if (s == "markdown") return ReportFormat::markdown;
  throw ValidationError("unknown report format '" + s + "' (expected json or markdown)");
}

namespace {

std::string fixed(double v, int digits = 4) {
  if (std::abs(v) < 0.5 * std::pow(10.0, -digits)) v = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string signed_fixed(double v) {
  const std::string s = fixed(v);
  return s[0] == '-' ? s : "+" + s;
}

std::string percent(double r) { return fixed(100.0 * r, 1) + "%"; }

std::string markdown(const BenchReport& r) {
  std::ostringstream os;
  os << "# Interference benchmark report\n";
  for (const auto& s : r.scenarios) {
    os << "\n## " << s.name << "\n\n";
    os << "Replicates: " << s.replicates << ". Ground-truth TTE: " << fixed(s.truth_mean) << " (sd "
       << fixed(s.truth_sd) << ").\n\n";
    os << "| Method | Estimate | Sig. | Bias-vs-truth | Expected-bias match |\n";
    os << "|---|---|---|---|---|\n";
    for (const auto& m : s.methods) {
      os << "| " << to_string(m.method) << " | " << fixed(m.mean) << " (sd " << fixed(m.sd) << ") | "
         << percent(m.significance_rate) << " | " << signed_fixed(m.bias) << " | "
         << (m.expected_bias_match_rate ? percent(*m.expected_bias_match_rate) : std::string("n/a")) << " |\n";
    }
    os << "\nCoverage of the 95% interval: ";
    for (std::size_t k = 0; k < s.methods.size(); ++k) {
      os << (k ? ", " : "") << to_string(s.methods[k].method) << " " << percent(s.methods[k].coverage_rate);
    }
    os << ". Failures: ";
    for (std::size_t k = 0; k < s.methods.size(); ++k) {
      os << (k ? ", " : "") << to_string(s.methods[k].method) << " " << s.methods[k].failures;
    }
    os << ".\n\nSign agreement:\n\n| | basic | network_aware | cmp |\n|---|---|---|---|\n";
    for (Eigen::Index a = 0; a < s.sign_agreement.rows(); ++a) {
      os << "| " << to_string(kMethods[static_cast<std::size_t>(a)]);
      for (Eigen::Index b = 0; b < s.sign_agreement.cols(); ++b) os << " | " << fixed(s.sign_agreement(a, b), 3);
      os << " |\n";
    }
    os << "\nBias direction: ";
    if (s.expected_bias_sign) {
      os << "expected " << to_string(*s.expected_bias_sign) << ", basic matches in "
         << percent(s.basic_bias_match_rate) << " of replicates (" << s.verdict << ").\n";
    } else {
      os << "no expectation (" << s.verdict << ").\n";
    }
  }
  return os.str();
}

}  // namespace

std::string render_report(const BenchReport& r, ReportFormat format) {
  if (format == ReportFormat::json) return to_json(r).dump(2) + "\n";
  return markdown(r);
}

}  // namespace bench
}  // namespace ilab
