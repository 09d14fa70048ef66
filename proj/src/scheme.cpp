#include "convtest/scheme.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace convtest {

namespace {
constexpr double kGradFloor = 1e-30;  // keeps boundary gradients finite
}

SchemeFactor SchemeFactor::gaussian(const Mat& sigma, int repeat) {
  SchemeFactor f;
  f.kind = FactorKind::Gaussian;
  f.dim = static_cast<int>(sigma.rows());
  f.repeat = repeat;
  f.cov = sigma;
  if (sigma.cols() != f.dim) throw std::invalid_argument("gaussian factor: covariance not square");
  f.chol.compute(sigma);
  if (f.chol.info() != Eigen::Success)
    throw std::invalid_argument("gaussian factor: covariance not positive definite");
  return f;
}

SchemeFactor SchemeFactor::poisson(int dim, int repeat) {
  SchemeFactor f;
  f.kind = FactorKind::Poisson;
  f.dim = dim;
  f.repeat = repeat;
  return f;
}

SchemeFactor SchemeFactor::discrete(int m, int repeat) {
  SchemeFactor f;
  f.kind = FactorKind::Discrete;
  f.dim = m;
  f.repeat = repeat;
  return f;
}

int ProductScheme::param_dim() const {
  int n = 0;
  for (const auto& f : factors) n += f.dim;
  return n;
}

int ProductScheme::obs_len() const {
  int n = 0;
  for (const auto& f : factors) {
    int per = (f.kind == FactorKind::Discrete) ? 1 : f.dim;
    n += per * f.repeat;
  }
  return n;
}

ProductScheme ProductScheme::expanded() const {
  ProductScheme out;
  for (const auto& f : factors) {
    if (f.kind == FactorKind::Poisson && f.dim > 1) {
      for (int i = 0; i < f.dim; ++i) out.factors.push_back(SchemeFactor::poisson(1, f.repeat));
    } else {
      out.factors.push_back(f);
    }
  }
  return out;
}

void ProductScheme::validate() const {
  if (factors.empty()) throw std::invalid_argument("ProductScheme: no factors");
  for (const auto& f : factors) {
    if (f.dim < 1) throw std::invalid_argument("SchemeFactor: dim must be >= 1");
    if (f.repeat < 1) throw std::invalid_argument("SchemeFactor: repeat must be >= 1");
    if (f.kind == FactorKind::Gaussian && (f.cov.rows() != f.dim || f.cov.cols() != f.dim))
      throw std::invalid_argument("SchemeFactor: covariance size mismatch");
  }
}

PsiValue psi_eval(const SchemeFactor& factor, const Vec& xk, const Vec& yk, bool want_grad) {
  if (xk.size() != factor.dim || yk.size() != factor.dim)
    throw std::invalid_argument("psi_eval: parameter block size mismatch");
  PsiValue out;
  switch (factor.kind) {
    case FactorKind::Gaussian: {
      Vec d = xk - yk;
      Vec sid = factor.chol.solve(d);
      out.value = -0.25 * d.dot(sid);
      if (want_grad) {
        out.grad_x = -0.5 * sid;
        out.grad_y = 0.5 * sid;
      }
      break;
    }
    case FactorKind::Poisson: {
      if ((xk.array() < 0.0).any() || (yk.array() < 0.0).any())
        throw std::domain_error("psi_eval: negative Poisson intensity");
      double v = 0.0;
      if (want_grad) {
        out.grad_x.resize(factor.dim);
        out.grad_y.resize(factor.dim);
      }
      for (int i = 0; i < factor.dim; ++i) {
        double sx = std::sqrt(xk[i]), sy = std::sqrt(yk[i]);
        v -= (sx - sy) * (sx - sy);
        if (want_grad) {
          out.grad_x[i] = std::sqrt(yk[i] / std::max(xk[i], kGradFloor)) - 1.0;
          out.grad_y[i] = std::sqrt(xk[i] / std::max(yk[i], kGradFloor)) - 1.0;
        }
      }
      out.value = v;
      break;
    }
    case FactorKind::Discrete: {
      if ((xk.array() < 0.0).any() || (yk.array() < 0.0).any())
        throw std::domain_error("psi_eval: negative probability");
      double rho = 0.0;
      for (int i = 0; i < factor.dim; ++i) rho += std::sqrt(xk[i] * yk[i]);
      out.value = 2.0 * std::log(std::max(rho, 1e-300));
      if (want_grad) {
        out.grad_x.resize(factor.dim);
        out.grad_y.resize(factor.dim);
        double r = std::max(rho, 1e-300);
        for (int i = 0; i < factor.dim; ++i) {
          out.grad_x[i] = std::sqrt(yk[i] / std::max(xk[i], kGradFloor)) / r;
          out.grad_y[i] = std::sqrt(xk[i] / std::max(yk[i], kGradFloor)) / r;
        }
      }
      break;
    }
  }
  return out;
}

DetectorPart build_detector(const SchemeFactor& factor, const Vec& xk, const Vec& yk) {
  if (xk.size() != factor.dim || yk.size() != factor.dim)
    throw std::invalid_argument("build_detector: parameter block size mismatch");
  DetectorPart p;
  p.kind = factor.kind;
  p.dim = factor.dim;
  p.repeat = factor.repeat;
  switch (factor.kind) {
    case FactorKind::Gaussian: {
      p.xi = 0.5 * factor.chol.solve(Vec(xk - yk));
      p.alpha = 0.5 * p.xi.dot(xk + yk);
      break;
    }
    case FactorKind::Poisson:
    case FactorKind::Discrete: {
      if ((xk.array() < 0.0).any() || (yk.array() < 0.0).any())
        throw std::domain_error("build_detector: negative parameter coordinate");
      // Coordinates vanishing on both sides carry no likelihood information
      // (the outcome occurs under neither hypothesis); one-sided near-zeros
      // get a floored log-ratio so the detector stays finite at saddle
      // points that concentrate mass away from an outcome.
      const double floor = 1e-16;
      p.xi.resize(factor.dim);
      for (int i = 0; i < factor.dim; ++i) {
        if (xk[i] < floor && yk[i] < floor)
          p.xi[i] = 0.0;
        else
          p.xi[i] = 0.5 * std::log(std::max(xk[i], floor) / std::max(yk[i], floor));
      }
      p.alpha = (factor.kind == FactorKind::Poisson) ? 0.5 * (xk.sum() - yk.sum()) : 0.0;
      break;
    }
  }
  return p;
}

Detector build_product_detector(const ProductScheme& scheme, const Vec& x, const Vec& y) {
  if (x.size() != scheme.param_dim() || y.size() != scheme.param_dim())
    throw std::invalid_argument("build_product_detector: parameter size mismatch");
  Detector d;
  int off = 0;
  for (const auto& f : scheme.factors) {
    d.parts.push_back(build_detector(f, x.segment(off, f.dim), y.segment(off, f.dim)));
    off += f.dim;
  }
  return d;
}

int Detector::obs_len() const {
  int n = 0;
  for (const auto& p : parts) {
    int per = (p.kind == FactorKind::Discrete) ? 1 : p.dim;
    n += per * p.repeat;
  }
  return n;
}

double Detector::eval(const Vec& obs) const {
  if (obs.size() != obs_len()) throw std::invalid_argument("Detector::eval: shape mismatch");
  double phi = 0.0;
  int off = 0;
  for (const auto& p : parts) {
    for (int r = 0; r < p.repeat; ++r) {
      switch (p.kind) {
        case FactorKind::Gaussian:
        case FactorKind::Poisson:
          phi += p.xi.dot(obs.segment(off, p.dim)) - p.alpha;
          off += p.dim;
          break;
        case FactorKind::Discrete: {
          int w = static_cast<int>(std::llround(obs[off]));
          if (w < 1 || w > p.dim)
            throw std::invalid_argument("Detector::eval: outcome outside 1..m");
          phi += p.xi[w - 1];
          off += 1;
          break;
        }
      }
    }
  }
  return phi - shift;
}

Vec sample_obs(const ProductScheme& scheme, const Vec& mu, Philox& rng) {
  if (mu.size() != scheme.param_dim())
    throw std::invalid_argument("sample_obs: parameter size mismatch");
  Vec obs(scheme.obs_len());
  int poff = 0, ooff = 0;
  for (const auto& f : scheme.factors) {
    Vec muk = mu.segment(poff, f.dim);
    switch (f.kind) {
      case FactorKind::Gaussian: {
        Mat chol = f.chol.matrixL();
        for (int r = 0; r < f.repeat; ++r) {
          Vec z(f.dim);
          for (int i = 0; i < f.dim; ++i) z[i] = rng.next_gaussian();
          obs.segment(ooff, f.dim) = muk + chol * z;
          ooff += f.dim;
        }
        break;
      }
      case FactorKind::Poisson: {
        if ((muk.array() < 0.0).any()) throw std::domain_error("sample_obs: negative intensity");
        for (int r = 0; r < f.repeat; ++r)
          for (int i = 0; i < f.dim; ++i)
            obs[ooff++] = static_cast<double>(rng.next_poisson(muk[i]));
        break;
      }
      case FactorKind::Discrete: {
        if ((muk.array() < 0.0).any() || std::fabs(muk.sum() - 1.0) > 1e-9)
          throw std::domain_error("sample_obs: probabilities must sum to one");
        for (int r = 0; r < f.repeat; ++r) obs[ooff++] = rng.next_categorical(muk);
        break;
      }
    }
    poff += f.dim;
  }
  return obs;
}

void validate_obs(const ProductScheme& scheme, const Vec& obs) {
  if (obs.size() != scheme.obs_len())
    throw std::invalid_argument("observation length does not match the scheme");
  int off = 0;
  for (const auto& f : scheme.factors) {
    for (int r = 0; r < f.repeat; ++r) {
      switch (f.kind) {
        case FactorKind::Gaussian:
          off += f.dim;
          break;
        case FactorKind::Poisson:
          for (int i = 0; i < f.dim; ++i, ++off) {
            double v = obs[off];
            if (v < 0.0 || std::fabs(v - std::llround(v)) > 1e-9)
              throw std::invalid_argument("Poisson entries must be nonnegative integers");
          }
          break;
        case FactorKind::Discrete: {
          double v = obs[off++];
          if (std::fabs(v - std::llround(v)) > 1e-9 || v < 1.0 || v > f.dim)
            throw std::invalid_argument("Discrete outcomes must lie in 1..m");
          break;
        }
      }
    }
  }
}

void write_obs_file(std::ostream& os, const ProductScheme& scheme,
                    const std::vector<Vec>& observations) {
  for (const Vec& obs : observations) {
    validate_obs(scheme, obs);
    int off = 0;
    bool first = true;
    for (const auto& f : scheme.factors) {
      int per = (f.kind == FactorKind::Discrete) ? 1 : f.dim;
      for (int r = 0; r < f.repeat; ++r)
        for (int i = 0; i < per; ++i, ++off) {
          if (!first) os << ' ';
          first = false;
          if (f.kind == FactorKind::Gaussian) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", obs[off]);
            os << buf;
          } else {
            os << static_cast<long long>(std::llround(obs[off]));
          }
        }
    }
    os << '\n';
  }
}

std::vector<Vec> read_obs_file(std::istream& is, const ProductScheme& scheme) {
  std::vector<Vec> out;
  std::string line;
  int len = scheme.obs_len();
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    Vec obs(len);
    for (int i = 0; i < len; ++i) {
      if (!(ss >> obs[i])) throw std::invalid_argument("observation file: short line");
    }
    double extra;
    if (ss >> extra) throw std::invalid_argument("observation file: long line");
    validate_obs(scheme, obs);
    out.push_back(obs);
  }
  return out;
}

}  // namespace convtest
