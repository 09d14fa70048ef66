// Command-line driver: ingests JSON problem specs, runs the solvers and
// simulations, writes JSON/CSV artifacts.
//
// Exit codes: 0 success, 2 validation error, 3 infeasible problem,
// 4 nonconvergence (result still written).

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "convtest/channels.hpp"
#include "convtest/functional.hpp"
#include "convtest/markov.hpp"
#include "convtest/montecarlo.hpp"
#include "convtest/pet.hpp"
#include "convtest/sensor.hpp"
#include "convtest/spec_io.hpp"

using namespace convtest;

namespace {

struct Options {
  std::string spec_path;
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  long long reps = 5000;
  double gap_tol = 1e-7;
  long long max_iters = 200000;
  std::string format = "table";
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

void write_json(const Options& opt, const std::string& name, const Json& j) {
  std::filesystem::create_directories(opt.out_dir);
  write_text(opt.out_dir + "/" + name, j.dump(2) + "\n");
}

FWConfig fw_config(const Options& opt) {
  FWConfig cfg;
  cfg.gap_tol = opt.gap_tol;
  cfg.max_iters = opt.max_iters;
  return cfg;
}

const PolytopeSpec& named_set(const ProblemSpecFile& f, const std::string& name) {
  auto it = f.sets.find(name);
  if (it == f.sets.end()) throw SpecFileError("undefined set name: " + name);
  return it->second;
}

std::vector<DomainTag> parse_tags(const Json& task) {
  std::vector<DomainTag> tags;
  if (!task.contains("tags")) return tags;
  for (const auto& t : task.at("tags")) {
    std::string kind = t.at("kind").get<std::string>();
    double margin = t.value("margin", 1e-9);
    if (kind == "unrestricted")
      tags.push_back(DomainTag::unrestricted());
    else if (kind == "positive-orthant")
      tags.push_back(DomainTag::positive_orthant(margin));
    else if (kind == "simplex-interior")
      tags.push_back(DomainTag::simplex_interior(margin));
    else
      throw SpecFileError("unknown domain tag: " + kind);
  }
  return tags;
}

int run_solve_pair(const ProblemSpecFile& f, const Options& opt) {
  if (!f.has_scheme) throw SpecFileError("solve-pair needs a scheme");
  PairProblem p;
  p.scheme = f.scheme;
  p.X.poly = named_set(f, f.task.at("x").get<std::string>());
  p.Y.poly = named_set(f, f.task.at("y").get<std::string>());
  p.tags = parse_tags(f.task);
  PairSolution s = solve_pair(p, fw_config(opt));
  if (f.task.contains("shift")) s = shift_detector(s, f.task.at("shift").get<double>());
  write_json(opt, "solution.json", pair_solution_to_json(s));
  std::cout << "eps_star=" << fmt6(s.eps_star) << "\n";
  std::cout << "opt=" << fmt6(s.opt) << " gap=" << fmt6(s.gap)
            << " certified_risk=" << fmt6(s.certified_eps) << "\n";
  if (s.trivial_overlap) std::cout << "note: hypothesis sets intersect; trivial detector\n";
  if (f.task.contains("eps_target")) {
    double target = f.task.at("eps_target").get<double>();
    auto k = repeated_plan(s.eps_star, target);
    if (k)
      std::cout << "K_min(" << fmt6(target) << ")=" << *k << "\n";
    else
      std::cout << "K_min(" << fmt6(target) << ")=unreachable (eps_star >= 1)\n";
  }
  return s.converged ? 0 : 4;
}

int run_aggregate(const ProblemSpecFile& f, const Options& opt) {
  Json out;
  const Json& task = f.task;
  Mat risks = matrix_from_json(task.at("risks"));
  if (task.contains("partition")) {
    std::vector<std::vector<int>> blocks;
    for (const auto& blk : task.at("partition")) blocks.push_back(blk.get<std::vector<int>>());
    ClosenessRelation C =
        ClosenessRelation::from_partition(blocks, static_cast<int>(risks.rows()));
    ShiftPlan plan = closeness_shifts(risks, C);
    out["mode"] = "multiple-unions";
    out["eps"] = plan.eps;
    out["alpha"] = matrix_to_json(plan.alpha);
    std::cout << "eps=" << fmt6(plan.eps) << "\n";
  } else if (task.contains("closeness")) {
    int M = static_cast<int>(risks.rows());
    ClosenessRelation C = ClosenessRelation::diagonal(M);
    for (const auto& pr : task.at("closeness"))
      C.close[pr[0].get<int>()][pr[1].get<int>()] = true;
    ShiftPlan plan = closeness_shifts(risks, C);
    out["mode"] = "closeness";
    out["eps"] = plan.eps;
    out["gap"] = plan.gap;
    out["all_close"] = plan.all_close;
    out["alpha"] = matrix_to_json(plan.alpha);
    std::cout << "eps=" << fmt6(plan.eps) << " gap=" << fmt6(plan.gap) << "\n";
  } else if (task.contains("importance")) {
    Vec p = vector_from_json(task.at("importance"));
    ShiftPlan plan = weighted_shifts(risks, p);
    out["mode"] = "weighted";
    out["eps"] = plan.eps;
    out["alpha"] = matrix_to_json(plan.alpha);
    std::cout << "eps=" << fmt6(plan.eps) << "\n";
  } else {
    UnionTest u = union_assemble(risks);
    out["mode"] = "union";
    out["eps"] = u.eps;
    out["shifts"] = matrix_to_json(u.shifts);
    std::cout << "eps=" << fmt6(u.eps) << "\n";
  }
  out["risks"] = matrix_to_json(risks);
  write_json(opt, "aggregate.json", out);
  return 0;
}

QueueChain queue_from_json(const Json& q, double mu) {
  return queueing_chain(q.at("lambda").get<double>(), mu, q.at("s").get<int>(),
                        q.at("b").get<int>());
}

int run_markov_plan(const ProblemSpecFile& f, const Options& opt) {
  const Json& task = f.task;
  double eps = task.value("eps", 0.01);
  Mat S1, S2;
  if (task.contains("queueing")) {
    const Json& q = task.at("queueing");
    S1 = queue_from_json(q, q.at("mu1").get<double>()).S;
    S2 = queue_from_json(q, q.at("mu2").get<double>()).S;
  } else {
    S1 = matrix_from_json(task.at("S1"));
    S2 = matrix_from_json(task.at("S2"));
  }
  FlooredChannel f1 = floor_channel(S1, 1e-300), f2 = floor_channel(S2, 1e-300);
  int n = static_cast<int>(S1.rows());
  PolytopeSpec X = task.contains("initial_set")
                       ? named_set(f, task.at("initial_set").get<std::string>())
                       : PolytopeSpec::simplex(n);
  MarkovPairPlan plan = markov_pair_plan(f1.A, f2.A, X, eps, task.value("k_cap", 100000));
  Json out;
  out["eps_curve"] = plan.eps_curve;
  out["detector"] = matrix_to_json(plan.detector);
  if (plan.k_min) out["k_min"] = *plan.k_min;
  write_json(opt, "markov_plan.json", out);
  if (opt.format == "table") {
    std::cout << "K\teps*(K)\n";
    size_t step = std::max<size_t>(1, plan.eps_curve.size() / 12);
    for (size_t k = 0; k < plan.eps_curve.size(); k += step)
      std::cout << (k + 1) << "\t" << fmt6(plan.eps_curve[k]) << "\n";
  }
  if (plan.k_min)
    std::cout << "K_min=" << *plan.k_min << "\n";
  else
    std::cout << "K_min=unreachable\n";
  return 0;
}

int run_sensor_rates(const ProblemSpecFile& f, const Options& opt) {
  const Json& task = f.task;
  DetectionSpec spec;
  spec.A = matrix_from_json(task.at("A"));
  spec.nuisance = named_set(f, task.at("nuisance").get<std::string>());
  for (const auto& e : task.at("signatures")) spec.signatures.push_back(vector_from_json(e));
  spec.amplitude_cap = task.at("R").get<double>();
  spec.sigma = task.value("sigma", 1.0);
  spec.eps = task.value("eps", 0.05);
  SensorCase which =
      (task.value("case", std::string("gaussian")) == "poisson") ? SensorCase::Poisson
                                                                 : SensorCase::Gaussian;
  SensorProfile prof = sensor_rate_profile(spec, which, fw_config(opt));
  Json out;
  out["rho"] = std::vector<double>(prof.rho.data(), prof.rho.data() + prof.rho.size());
  out["rho_star"] =
      std::vector<double>(prof.rho_star.data(), prof.rho_star.data() + prof.rho_star.size());
  out["kappa"] = prof.kappa;
  write_json(opt, "sensor_rates.json", out);
  std::filesystem::create_directories(opt.out_dir);
  write_text(opt.out_dir + "/sensing_matrix.csv", matrix_to_csv(spec.A));
  std::cout << "i\trho\trho*\n";
  for (int i = 0; i < prof.rho.size(); ++i)
    std::cout << (i + 1) << "\t" << fmt6(prof.rho[i]) << "\t" << fmt6(prof.rho_star[i]) << "\n";
  std::cout << "kappa=" << fmt6(prof.kappa) << "\n";
  return 0;
}

int run_resolve(const ProblemSpecFile& f, const Options& opt) {
  const Json& task = f.task;
  FunctionalSpec spec;
  if (task.contains("channels")) {
    for (const auto& c : task.at("channels"))
      spec.channels.push_back(floor_channel(matrix_from_json(c)).A);
  } else if (task.contains("deconvolution")) {
    const Json& d = task.at("deconvolution");
    int n = d.at("n").get<int>();
    int m = d.at("m").get<int>();
    Vec centers(n);
    for (int j = 0; j < n; ++j) centers[j] = -1.0 + (j + 0.5) * 2.0 / n;
    for (const auto& noise_spec : d.at("noise")) {
      std::string kind = noise_spec.at("kind").get<std::string>();
      NoiseModel noise;
      if (kind == "laplace")
        noise = NoiseModel::laplace(noise_spec.value("mu", 0.0), noise_spec.at("a").get<double>());
      else if (kind == "gamma")
        noise = NoiseModel::gamma_shape2(noise_spec.value("loc", 0.0),
                                         noise_spec.at("scale").get<double>());
      else if (kind == "laplace-mixture")
        noise = NoiseModel::laplace_mixture(noise_spec.at("mu1").get<double>(),
                                            noise_spec.at("a1").get<double>(),
                                            noise_spec.at("mu2").get<double>(),
                                            noise_spec.at("a2").get<double>());
      else
        throw SpecFileError("unknown noise kind: " + kind);
      double delta = noise_spec.value("delta", 1e-3);
      Vec edges = default_obs_edges(-1.0, 1.0, m, delta, noise);
      spec.channels.push_back(floor_channel(deconvolution_channel(centers, edges, noise)).A);
    }
  } else {
    throw SpecFileError("resolve task needs channels or a deconvolution block");
  }
  for (const auto& k : task.at("repeats")) spec.repeats.push_back(k.get<long long>());
  if (task.contains("latent")) {
    spec.latent_set = named_set(f, task.at("latent").get<std::string>());
  } else {
    int n = static_cast<int>(spec.channels[0].cols());
    spec.latent_set = PolytopeSpec::simplex(n);
    if (task.contains("smoothness")) {
      double h = 2.0 / n;
      double bound = task.at("smoothness").get<double>() * h * h;
      for (int i = 1; i + 1 < n; ++i) {
        Vec a = Vec::Zero(n);
        a[i - 1] = 1.0;
        a[i] = -2.0;
        a[i + 1] = 1.0;
        spec.latent_set.add_ineq(a, bound);
        spec.latent_set.add_ineq(Vec(-a), bound);
      }
    }
  }
  spec.g = task.contains("g") ? vector_from_json(task.at("g"))
                              : [&] {
                                  // default: indicator of centers <= t
                                  double t = task.value("t", 0.0);
                                  int n = spec.latent_set.dim;
                                  Vec g(n);
                                  for (int j = 0; j < n; ++j)
                                    g[j] = (-1.0 + (j + 0.5) * 2.0 / n <= t) ? 1.0 : 0.0;
                                  return g;
                                }();
  spec.alpha = task.value("alpha", 0.5);
  double eps = task.at("eps").get<double>();
  ResolutionResult r = functional_resolution(spec, eps, fw_config(opt));
  Json out;
  out["rho"] = r.rho;
  out["rho_max"] = r.rho_max;
  out["theta"] = r.theta;
  out["degenerate"] = r.degenerate;
  out["eps_star_at_rho"] = r.test.eps_star;
  out["solution"] = pair_solution_to_json(r.test);
  write_json(opt, "resolution.json", out);
  for (size_t l = 0; l < spec.channels.size(); ++l)
    write_text(opt.out_dir + "/channel_" + std::to_string(l + 1) + ".csv",
               matrix_to_csv(spec.channels[l]));
  std::cout << "rho=" << fmt6(r.rho) << " rho_max=" << fmt6(r.rho_max)
            << " theta=" << fmt6(r.theta) << "\n";
  return 0;
}

int run_simulate(const ProblemSpecFile& f, const Options& opt) {
  if (!f.has_scheme) throw SpecFileError("simulate needs a scheme");
  const Json& task = f.task;
  PairProblem p;
  p.scheme = f.scheme;
  p.X.poly = named_set(f, task.at("x").get<std::string>());
  p.Y.poly = named_set(f, task.at("y").get<std::string>());
  p.tags = parse_tags(task);
  PairSolution s = solve_pair(p, fw_config(opt));

  auto side_report = [&](bool x_side, const Vec& truth) {
    TruthSpec t;
    t.point = truth;
    auto rejects = [&](const Vec& obs) {
      PairVerdict v = decide(s, obs);
      return x_side ? (v != PairVerdict::AcceptX) : (v != PairVerdict::AcceptY);
    };
    return estimate_risk(s.scheme, t, rejects, opt.reps, opt.seed, x_side ? 0 : (1ull << 32));
  };
  Vec tx = task.contains("truth_x") ? vector_from_json(task.at("truth_x")) : s.x_star;
  Vec ty = task.contains("truth_y") ? vector_from_json(task.at("truth_y")) : s.y_star;
  RiskReport rep;
  rep.x_side = side_report(true, tx);
  rep.y_side = side_report(false, ty);
  rep.bound = s.certified_eps;
  rep.seed = opt.seed;
  rep.stream = 0;
  rep.replications = opt.reps;

  Json out;
  out["replications"] = rep.replications;
  out["seed"] = rep.seed;
  out["bound"] = rep.bound;
  out["eps_hat_x"] = rep.x_side.eps_hat;
  out["ci_x"] = {rep.x_side.ci_lo, rep.x_side.ci_hi};
  out["eps_hat_y"] = rep.y_side.eps_hat;
  out["ci_y"] = {rep.y_side.ci_lo, rep.y_side.ci_hi};
  out["solution"] = pair_solution_to_json(s);
  write_json(opt, "risk.json", out);
  std::cout << "side\teps_hat\tci_lo\tci_hi\tbound\n";
  std::cout << "X\t" << fmt6(rep.x_side.eps_hat) << "\t" << fmt6(rep.x_side.ci_lo) << "\t"
            << fmt6(rep.x_side.ci_hi) << "\t" << fmt6(rep.bound) << "\n";
  std::cout << "Y\t" << fmt6(rep.y_side.eps_hat) << "\t" << fmt6(rep.y_side.ci_lo) << "\t"
            << fmt6(rep.y_side.ci_hi) << "\t" << fmt6(rep.bound) << "\n";
  return 0;
}

int run_pet_plan(const ProblemSpecFile& f, const Options& opt) {
  const Json& task = f.task;
  int side = task.at("side").get<int>();
  int arcs = task.at("arcs").get<int>();
  Mat P = pet_geometry(side, arcs, task.value("rays", 10000LL), task.value("geom_seed", 20240901ULL));
  PolytopeSpec dens = pet_density_class(side, task.at("L").get<double>(),
                                        task.at("R").get<double>(), task.value("floor", 1e-6));
  const Json& spot = task.at("spot");
  Vec g = pet_spot_functional(side, spot.at("row").get<int>(), spot.at("col").get<int>(),
                              spot.at("size").get<int>());
  PetPlan plan = pet_plan(P, dens, g, task.at("alpha").get<double>(),
                          task.at("rho").get<double>(), task.value("eps", 0.01), fw_config(opt));
  Json out;
  out["t_star"] = plan.t_star;
  out["h"] = plan.h;
  out["lambda1"] =
      std::vector<double>(plan.lambda1.data(), plan.lambda1.data() + plan.lambda1.size());
  out["lambda2"] =
      std::vector<double>(plan.lambda2.data(), plan.lambda2.data() + plan.lambda2.size());
  out["detector"] = detector_to_json(plan.detector);
  write_json(opt, "pet.json", out);
  write_text(opt.out_dir + "/pet_geometry.csv", matrix_to_csv(P));
  std::cout << "t_star=" << fmt6(plan.t_star) << " H=" << fmt6(plan.h) << "\n";
  return plan.inner.converged ? 0 : 4;
}

int run_decide(const std::string& solution_path, const std::string& obs_path) {
  std::ifstream sin(solution_path);
  if (!sin) throw SpecFileError("cannot open solution file: " + solution_path);
  Json doc;
  try {
    sin >> doc;
  } catch (const std::exception& e) {
    throw SpecFileError(std::string("malformed JSON: ") + e.what());
  }
  if (doc.contains("solution")) doc = doc.at("solution");
  LoadedSolution sol = pair_solution_from_json(doc);
  std::ifstream oin(obs_path);
  if (!oin) throw SpecFileError("cannot open observation file: " + obs_path);
  for (const Vec& obs : read_obs_file(oin, sol.scheme))
    std::cout << ((sol.detector.eval(obs) >= 0.0) ? "accept-X" : "accept-Y") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"near-optimal composite hypothesis testing toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  Options opt;
  app.add_option("--out", opt.out_dir, "output directory");
  app.add_option("--seed", opt.seed, "RNG seed for stochastic outputs");
  app.add_option("--reps", opt.reps, "Monte Carlo replications");
  app.add_option("--gap-tol", opt.gap_tol, "Frank-Wolfe gap tolerance");
  app.add_option("--max-iters", opt.max_iters, "Frank-Wolfe iteration cap");
  app.add_option("--format", opt.format, "output format: json|table");

  std::string solution_path, obs_path;
  auto add_spec = [&](CLI::App* sub) {
    sub->add_option("--spec", opt.spec_path, "JSON problem spec")->required();
  };
  add_spec(app.add_subcommand("solve-pair", "solve a pairwise testing problem"));
  add_spec(app.add_subcommand("aggregate", "assemble pairwise risks into shifts and bounds"));
  add_spec(app.add_subcommand("markov-plan", "observation-time planning for two chains"));
  add_spec(app.add_subcommand("sensor-rates", "epsilon-rate profiles for event detection"));
  add_spec(app.add_subcommand("resolve", "functional testing resolution"));
  add_spec(app.add_subcommand("simulate", "Monte Carlo risk report for a pair problem"));
  add_spec(app.add_subcommand("pet-plan", "observation-time planning for the PET toy"));
  auto* dec = app.add_subcommand("decide", "re-evaluate a saved solution on an observation file");
  dec->add_option("--solution", solution_path, "solution JSON")->required();
  dec->add_option("--obs", obs_path, "observation file")->required();

  CLI11_PARSE(app, argc, argv);
  const std::string sub = app.get_subcommands().front()->get_name();

  try {
    if (sub == "decide") return run_decide(solution_path, obs_path);
    ProblemSpecFile f = load_problem_file(opt.spec_path);
    const std::string type = f.task.at("type").get<std::string>();
    auto expect = [&](const char* want) {
      if (type != want)
        throw SpecFileError("task type '" + type + "' does not match subcommand " + sub);
    };
    if (sub == "solve-pair") {
      expect("pair");
      return run_solve_pair(f, opt);
    }
    if (sub == "aggregate") {
      if (type != "union" && type != "multitest" && type != "multiple-unions")
        throw SpecFileError("aggregate expects a union/multitest task");
      return run_aggregate(f, opt);
    }
    if (sub == "markov-plan") {
      expect("markov");
      return run_markov_plan(f, opt);
    }
    if (sub == "sensor-rates") {
      expect("sensor");
      return run_sensor_rates(f, opt);
    }
    if (sub == "resolve") {
      expect("functional");
      return run_resolve(f, opt);
    }
    if (sub == "simulate") {
      expect("simulate");
      return run_simulate(f, opt);
    }
    if (sub == "pet-plan") {
      expect("pet");
      return run_pet_plan(f, opt);
    }
    throw SpecFileError("unknown subcommand");
  } catch (const SpecFileError& e) {
    std::cerr << "spec error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const EmptySetError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 3;
  } catch (const IndistinguishableError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
