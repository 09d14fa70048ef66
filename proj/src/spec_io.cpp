#include "convtest/spec_io.hpp"

#include <cstdio>
#include <fstream>

namespace convtest {

namespace {

double num(const Json& j, const char* what) {
  if (!j.is_number()) throw SpecFileError(std::string("expected a number for ") + what);
  double v = j.get<double>();
  if (!std::isfinite(v)) throw SpecFileError(std::string("nonfinite value for ") + what);
  return v;
}

}  // namespace

std::string fmt6(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

Vec vector_from_json(const Json& j) {
  if (!j.is_array()) throw SpecFileError("expected an array of numbers");
  Vec v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = num(j[i], "vector entry");
  return v;
}

Mat matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw SpecFileError("expected a matrix (array of rows)");
  size_t cols = j[0].size();
  Mat m(j.size(), cols);
  for (size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw SpecFileError("ragged matrix rows");
    for (size_t c = 0; c < cols; ++c)
      m(static_cast<int>(r), static_cast<int>(c)) = num(j[r][c], "matrix entry");
  }
  return m;
}

Json matrix_to_json(const Mat& m) {
  Json rows = Json::array();
  for (int r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string matrix_to_csv(const Mat& m) {
  std::string out;
  char buf[40];
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
      out += buf;
      out += (c + 1 < m.cols()) ? ',' : '\n';
    }
  }
  return out;
}

namespace {
PolytopeSpec parse_polytope_impl(const Json& j);
}

PolytopeSpec parse_polytope(const Json& j) {
  try {
    return parse_polytope_impl(j);
  } catch (const std::invalid_argument& e) {
    throw SpecFileError(e.what());
  } catch (const Json::exception& e) {
    throw SpecFileError(e.what());
  }
}

namespace {
PolytopeSpec parse_polytope_impl(const Json& j) {
  if (!j.is_object()) throw SpecFileError("set definition must be an object");
  PolytopeSpec s;
  if (!j.contains("dim")) throw SpecFileError("set definition needs dim");
  s.dim = j.at("dim").get<int>();
  if (j.contains("point")) {
    // singleton shorthand
    Vec p = vector_from_json(j.at("point"));
    return PolytopeSpec::singleton(p);
  }
  if (j.contains("simplex") && j.at("simplex").get<bool>()) {
    s = PolytopeSpec::simplex(s.dim);
  } else {
    if (!j.contains("lower") || !j.contains("upper"))
      throw SpecFileError("set definition needs lower/upper bounds");
    s.lower = vector_from_json(j.at("lower"));
    s.upper = vector_from_json(j.at("upper"));
  }
  if (j.contains("ineq"))
    for (const auto& row : j.at("ineq"))
      s.add_ineq(vector_from_json(row.at("a")), num(row.at("b"), "ineq rhs"));
  if (j.contains("eq"))
    for (const auto& row : j.at("eq"))
      s.add_eq(vector_from_json(row.at("c")), num(row.at("d"), "eq rhs"));
  s.validate();
  return s;
}
}  // namespace

Json polytope_to_json(const PolytopeSpec& s) {
  Json j;
  j["dim"] = s.dim;
  j["lower"] = std::vector<double>(s.lower.data(), s.lower.data() + s.dim);
  j["upper"] = std::vector<double>(s.upper.data(), s.upper.data() + s.dim);
  Json ineq = Json::array(), eq = Json::array();
  for (const auto& [a, b] : s.ineq)
    ineq.push_back({{"a", std::vector<double>(a.data(), a.data() + a.size())}, {"b", b}});
  for (const auto& [c, d] : s.eq)
    eq.push_back({{"c", std::vector<double>(c.data(), c.data() + c.size())}, {"d", d}});
  j["ineq"] = std::move(ineq);
  j["eq"] = std::move(eq);
  return j;
}

ProductScheme parse_scheme(const Json& j) {
  if (!j.is_object() || !j.contains("factors"))
    throw SpecFileError("scheme must contain a factors array");
  ProductScheme s;
  for (const auto& f : j.at("factors")) {
    std::string kind = f.at("kind").get<std::string>();
    int repeat = f.value("repeat", 1);
    if (kind == "gaussian") {
      Mat cov = matrix_from_json(f.at("cov"));
      s.factors.push_back(SchemeFactor::gaussian(cov, repeat));
    } else if (kind == "poisson") {
      s.factors.push_back(SchemeFactor::poisson(f.at("dim").get<int>(), repeat));
    } else if (kind == "discrete") {
      s.factors.push_back(SchemeFactor::discrete(f.at("m").get<int>(), repeat));
    } else {
      throw SpecFileError("unknown factor kind: " + kind);
    }
  }
  s.validate();
  return s;
}

Json scheme_to_json(const ProductScheme& s) {
  Json factors = Json::array();
  for (const auto& f : s.factors) {
    Json jf;
    jf["repeat"] = f.repeat;
    switch (f.kind) {
      case FactorKind::Gaussian:
        jf["kind"] = "gaussian";
        jf["dim"] = f.dim;
        jf["cov"] = matrix_to_json(f.cov);
        break;
      case FactorKind::Poisson:
        jf["kind"] = "poisson";
        jf["dim"] = f.dim;
        break;
      case FactorKind::Discrete:
        jf["kind"] = "discrete";
        jf["m"] = f.dim;
        break;
    }
    factors.push_back(std::move(jf));
  }
  return Json{{"factors", std::move(factors)}};
}

Json detector_to_json(const Detector& d) {
  Json parts = Json::array();
  for (const auto& p : d.parts) {
    Json jp;
    jp["kind"] = (p.kind == FactorKind::Gaussian)  ? "gaussian"
                 : (p.kind == FactorKind::Poisson) ? "poisson"
                                                   : "discrete";
    jp["dim"] = p.dim;
    jp["repeat"] = p.repeat;
    jp["xi"] = std::vector<double>(p.xi.data(), p.xi.data() + p.xi.size());
    jp["alpha"] = p.alpha;
    parts.push_back(std::move(jp));
  }
  return Json{{"shift", d.shift}, {"parts", std::move(parts)}};
}

Detector detector_from_json(const Json& j) {
  Detector d;
  d.shift = num(j.at("shift"), "detector shift");
  for (const auto& jp : j.at("parts")) {
    DetectorPart p;
    std::string kind = jp.at("kind").get<std::string>();
    p.kind = (kind == "gaussian")  ? FactorKind::Gaussian
             : (kind == "poisson") ? FactorKind::Poisson
                                   : FactorKind::Discrete;
    p.dim = jp.at("dim").get<int>();
    p.repeat = jp.at("repeat").get<int>();
    p.xi = vector_from_json(jp.at("xi"));
    p.alpha = num(jp.at("alpha"), "detector alpha");
    if (p.xi.size() != p.dim) throw SpecFileError("detector part size mismatch");
    d.parts.push_back(std::move(p));
  }
  return d;
}

Json pair_solution_to_json(const PairSolution& s) {
  Json j;
  j["scheme"] = scheme_to_json(s.scheme);
  j["x_star"] = std::vector<double>(s.x_star.data(), s.x_star.data() + s.x_star.size());
  j["y_star"] = std::vector<double>(s.y_star.data(), s.y_star.data() + s.y_star.size());
  j["opt"] = s.opt;
  j["eps_star"] = s.eps_star;
  j["gap"] = s.gap;
  j["certified_eps"] = s.certified_eps;
  j["risk_x_bound"] = s.risk_x_bound;
  j["risk_y_bound"] = s.risk_y_bound;
  j["converged"] = s.converged;
  j["trivial_overlap"] = s.trivial_overlap;
  j["detector"] = detector_to_json(s.detector);
  return j;
}

LoadedSolution pair_solution_from_json(const Json& j) {
  LoadedSolution out;
  out.scheme = parse_scheme(j.at("scheme"));
  out.detector = detector_from_json(j.at("detector"));
  out.eps_star = num(j.at("eps_star"), "eps_star");
  if (out.detector.obs_len() != out.scheme.obs_len())
    throw SpecFileError("solution detector does not match its scheme");
  return out;
}

ProblemSpecFile parse_problem_file(const Json& doc) {
  if (!doc.is_object()) throw SpecFileError("problem spec must be a JSON object");
  ProblemSpecFile f;
  if (!doc.contains("spec_version")) throw SpecFileError("missing spec_version");
  f.version = doc.at("spec_version").get<int>();
  if (f.version != 1) throw SpecFileError("unsupported spec_version");
  if (doc.contains("scheme")) {
    f.scheme = parse_scheme(doc.at("scheme"));
    f.has_scheme = true;
  }
  if (doc.contains("sets")) {
    for (const auto& [name, body] : doc.at("sets").items())
      f.sets.emplace(name, parse_polytope(body));
  }
  if (!doc.contains("task") || !doc.at("task").is_object())
    throw SpecFileError("missing task object");
  f.task = doc.at("task");
  if (!f.task.contains("type")) throw SpecFileError("task needs a type");
  return f;
}

ProblemSpecFile load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecFileError("cannot open spec file: " + path);
  Json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    throw SpecFileError(std::string("malformed JSON: ") + e.what());
  }
  return parse_problem_file(doc);
}

}  // namespace convtest
