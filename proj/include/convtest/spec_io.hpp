#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "convtest/multitest.hpp"
#include "convtest/pairtest.hpp"
#include "convtest/polytope.hpp"
#include "convtest/scheme.hpp"

namespace convtest {

using Json = nlohmann::json;

struct SpecFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Problem-spec document: {"spec_version": 1, "scheme": {...}, "sets": {...},
// "task": {...}}.  Validation failures throw SpecFileError.
struct ProblemSpecFile {
  int version = 1;
  ProductScheme scheme;          // may be empty for tasks that build their own
  bool has_scheme = false;
  std::map<std::string, PolytopeSpec> sets;
  Json task;
};

ProblemSpecFile parse_problem_file(const Json& doc);
ProblemSpecFile load_problem_file(const std::string& path);

PolytopeSpec parse_polytope(const Json& j);
Json polytope_to_json(const PolytopeSpec& s);

ProductScheme parse_scheme(const Json& j);
Json scheme_to_json(const ProductScheme& s);

Json detector_to_json(const Detector& d);
Detector detector_from_json(const Json& j);

Json pair_solution_to_json(const PairSolution& s);
// Reload enough of a solution to re-evaluate decisions: scheme + detector.
struct LoadedSolution {
  ProductScheme scheme;
  Detector detector;
  double eps_star = 1.0;
};
LoadedSolution pair_solution_from_json(const Json& j);

// Matrices as CSV (one row per line, comma separated).
std::string matrix_to_csv(const Mat& m);
Json matrix_to_json(const Mat& m);
Mat matrix_from_json(const Json& j);
Vec vector_from_json(const Json& j);

// one-line fixed 6-significant-digit formatting used by all tables
std::string fmt6(double x);

}  // namespace convtest
