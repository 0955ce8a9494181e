// Copyright 2026 The drumsep Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

// KL-divergence factorizations with multiplicative updates.
//
// NMFD:    V ~ L = sum_{t<L} W(t) shift_t(H), shift_t moves columns t frames
//          to the right and zero-fills.
// SAB-NMF: each frame v_n ~ W_n h_n on its own, W_n starting from the fixed
//          templates.
//
// Semi-adaptive bases move from the templates towards the free update with
// weight lambda(k) = (k/K)^p:  W <- (1 - lambda) W + lambda MU(W).  Because
// the model is linear in W and KL is convex in the model, each blended step
// still never increases the divergence.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "drumsep/common.hpp"
#include "drumsep/model/wiener.hpp"
#include "drumsep/nmf/templates.hpp"

namespace drumsep::nmf {

enum class BasesMode { Fixed, Adaptive, SemiAdaptive };

inline std::string_view bases_mode_name(BasesMode m) {
  switch (m) {
    case BasesMode::Fixed: return "fixed";
    case BasesMode::Adaptive: return "adaptive";
    case BasesMode::SemiAdaptive: return "semi-adaptive";
  }
  return "?";
}

struct NmfdConfig {
  int iterations = 200;  // K
  BasesMode mode = BasesMode::Fixed;
  double lambda_power = 2.0;  // semi-adaptive schedule exponent
  double epsilon = 1e-12;
  double basis_noise = 0.01;  // relative perturbation of adaptive starting bases
  std::uint64_t seed = 0;

  void validate() const {
    if (iterations < 1) throw ConfigError("nmf: iterations must be >= 1");
    if (!(epsilon > 0)) throw ConfigError("nmf: epsilon must be > 0");
    if (!(lambda_power > 0)) throw ConfigError("nmf: lambda power must be > 0");
    if (basis_noise < 0) throw ConfigError("nmf: basis noise must be >= 0");
  }

  double lambda(int k) const {
    if (mode == BasesMode::Fixed) return 0.0;
    if (mode == BasesMode::Adaptive) return 1.0;
    return std::pow(double(k) / double(iterations), lambda_power);
  }
};

struct FactorizationResult {
  std::vector<RealMatrix> W;  // NMFD: W(t), bins x R; SAB-NMF: empty (bases are per frame)
  RealMatrix H;               // R x frames
  RealMatrix model;           // full reconstruction, bins x frames
  std::vector<RealMatrix> stems;  // per-stem reconstruction before Wiener, kNumStems entries
  std::vector<double> divergence;  // after each iteration
};

/// Generalized KL divergence with 0 log 0 = 0 and the model floored at eps.
inline double kl_divergence(const RealMatrix& v, const RealMatrix& l, double eps = 1e-12) {
  double d = 0;
  for (index_t j = 0; j < v.cols(); ++j)
    for (index_t i = 0; i < v.rows(); ++i) {
      const double a = v(i, j), b = std::max(l(i, j), eps);
      if (a > 0) d += a * std::log(a / b);
      d += b - a;
    }
  return d;
}

namespace detail {

inline void check_v(const RealMatrix& v, index_t bins) {
  if (v.rows() != bins)
    throw ShapeError("nmf: V has " + std::to_string(v.rows()) + " bins, dictionary has " +
                     std::to_string(bins));
  if (v.cols() < 1) throw EmptyInputError("nmf: V has no frames");
  if (!v.allFinite() || (v.array() < 0).any())
    throw DomainError("nmf: V must be finite and nonnegative");
  if (!(v.sum() > 0)) throw DegenerateInputError("nmf: V is all zero");
}

inline RealMatrix random_activations(index_t r, index_t n, std::mt19937_64& rng) {
  // uniform on (0, 1]
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RealMatrix h(r, n);
  for (index_t i = 0; i < h.size(); ++i) h.data()[i] = 1.0 - u(rng);
  return h;
}

inline void perturb(RealMatrix& w, double rel, std::mt19937_64& rng) {
  if (rel == 0) return;
  std::uniform_real_distribution<double> u(-rel, rel);
  for (index_t i = 0; i < w.size(); ++i) w.data()[i] *= 1.0 + u(rng);
}

inline RealMatrix convolve(const std::vector<RealMatrix>& w, const RealMatrix& h) {
  const index_t n = h.cols();
  RealMatrix l = RealMatrix::Zero(w[0].rows(), n);
  for (index_t t = 0; t < static_cast<index_t>(w.size()) && t < n; ++t)
    l.rightCols(n - t).noalias() += w[t] * h.leftCols(n - t);
  return l;
}

inline RealMatrix ratio(const RealMatrix& v, const RealMatrix& l, double eps) {
  return v.cwiseQuotient(l.cwiseMax(eps));
}

}  // namespace detail

/// Reconstruction of a single component r.
inline RealMatrix component_reconstruction(const std::vector<RealMatrix>& w, const RealMatrix& h,
                                           index_t r) {
  const index_t n = h.cols();
  RealMatrix out = RealMatrix::Zero(w[0].rows(), n);
  for (index_t t = 0; t < static_cast<index_t>(w.size()) && t < n; ++t)
    out.rightCols(n - t).noalias() += w[t].col(r) * h.row(r).head(n - t);
  return out;
}

/// Per-stem sums of component reconstructions.
inline std::vector<RealMatrix> group_components(const std::vector<RealMatrix>& w,
                                                const RealMatrix& h,
                                                const std::vector<Stem>& labels) {
  if (static_cast<index_t>(labels.size()) != h.rows())
    throw ConfigError("nmf: " + std::to_string(h.rows()) + " components but " +
                      std::to_string(labels.size()) + " stem labels");
  std::vector<RealMatrix> stems(kNumStems, RealMatrix::Zero(w[0].rows(), h.cols()));
  for (index_t r = 0; r < h.rows(); ++r)
    stems[stem_index(labels[r])] += component_reconstruction(w, h, r);
  return stems;
}

/// Convolutive factorization of V with the dictionary's L-frame templates.
inline FactorizationResult nmfd_decompose(const RealMatrix& v, const TemplateDictionary& dict,
                                          const NmfdConfig& cfg) {
  cfg.validate();
  detail::check_v(v, dict.num_bins);
  const index_t n = v.cols(), L = dict.length, R = dict.size();
  const double eps = cfg.epsilon;
  std::mt19937_64 rng(cfg.seed);

  FactorizationResult res;
  res.W = dict.convolutive_bases();
  if (cfg.mode == BasesMode::Adaptive)
    for (auto& wt : res.W) detail::perturb(wt, cfg.basis_noise, rng);
  res.H = detail::random_activations(R, n, rng);

  RealMatrix lam = detail::convolve(res.W, res.H);
  for (int k = 1; k <= cfg.iterations; ++k) {
    // H: exact majorize-minimize step, frames past the end excluded
    {
      const RealMatrix q = detail::ratio(v, lam, eps);
      RealMatrix num = RealMatrix::Zero(R, n), den = RealMatrix::Zero(R, n);
      for (index_t t = 0; t < L && t < n; ++t) {
        num.leftCols(n - t).noalias() += res.W[t].transpose() * q.rightCols(n - t);
        den.leftCols(n - t).colwise() += res.W[t].colwise().sum().transpose();
      }
      res.H = res.H.cwiseProduct(num.cwiseQuotient(den.cwiseMax(eps)));
      lam = detail::convolve(res.W, res.H);
    }
    const double lambda = cfg.lambda(k);
    if (lambda > 0) {
      const RealMatrix q = detail::ratio(v, lam, eps);
      std::vector<RealMatrix> next(res.W.size());
      for (index_t t = 0; t < L; ++t) {
        if (t >= n) {
          next[t] = res.W[t];
          continue;
        }
        const RealMatrix num = q.rightCols(n - t) * res.H.leftCols(n - t).transpose();
        const Vector den = res.H.leftCols(n - t).rowwise().sum();
        RealMatrix mu = res.W[t].cwiseProduct(num);
        for (index_t r = 0; r < R; ++r) mu.col(r) /= std::max(den[r], eps);
        next[t] = lambda >= 1.0 ? mu : ((1.0 - lambda) * res.W[t] + lambda * mu).eval();
      }
      res.W = std::move(next);
      lam = detail::convolve(res.W, res.H);
    }
    res.divergence.push_back(kl_divergence(v, lam, eps));
  }
  res.model = lam;
  res.stems = group_components(res.W, res.H, dict.labels());
  return res;
}

/// Frame-wise factorization: every column of V is decomposed on its own.
inline FactorizationResult sabnmf_decompose(const RealMatrix& v, const TemplateDictionary& dict,
                                            const NmfdConfig& cfg) {
  cfg.validate();
  detail::check_v(v, dict.num_bins);
  const index_t n = v.cols(), R = dict.size(), bins = dict.num_bins;
  const double eps = cfg.epsilon;
  const RealMatrix w0 = dict.frame_bases();
  const auto labels = dict.labels();
  std::mt19937_64 rng(cfg.seed);

  FactorizationResult res;
  res.H = detail::random_activations(R, n, rng);
  res.model = RealMatrix::Zero(bins, n);
  res.stems.assign(kNumStems, RealMatrix::Zero(bins, n));
  res.divergence.assign(static_cast<std::size_t>(cfg.iterations), 0.0);
  const Vector w0_colsum = w0.colwise().sum().transpose();

  for (index_t j = 0; j < n; ++j) {
    const Vector vj = v.col(j);
    Vector h = res.H.col(j);
    if (!(vj.sum() > 0)) {
      // silent frame: the KL optimum is h = 0
      res.H.col(j).setZero();
      continue;
    }
    RealMatrix w = w0;
    if (cfg.mode == BasesMode::Adaptive) detail::perturb(w, cfg.basis_noise, rng);
    Vector colsum = cfg.mode == BasesMode::Fixed ? w0_colsum : Vector(w.colwise().sum().transpose());
    Vector lam = w * h;
    for (int k = 1; k <= cfg.iterations; ++k) {
      const Vector q = vj.cwiseQuotient(lam.cwiseMax(eps));
      h = h.cwiseProduct((w.transpose() * q).cwiseQuotient(colsum.cwiseMax(eps)));
      lam.noalias() = w * h;
      const double lambda = cfg.lambda(k);
      if (lambda > 0) {
        const Vector q2 = vj.cwiseQuotient(lam.cwiseMax(eps));
        RealMatrix mu = w.cwiseProduct(q2 * h.transpose());
        for (index_t r = 0; r < R; ++r) mu.col(r) /= std::max(h[r], eps);
        w = lambda >= 1.0 ? mu : ((1.0 - lambda) * w + lambda * mu).eval();
        colsum = w.colwise().sum().transpose();
        lam.noalias() = w * h;
      }
      res.divergence[static_cast<std::size_t>(k - 1)] += kl_divergence(vj, lam, eps);
    }
    res.H.col(j) = h;
    res.model.col(j) = lam;
    for (index_t r = 0; r < R; ++r) res.stems[stem_index(labels[r])].col(j) += w.col(r) * h[r];
  }
  return res;
}

/// Alpha-Wiener refinement of the grouped stems against the mixture.
inline std::vector<RealMatrix> components_to_stems(const FactorizationResult& res,
                                                   const RealMatrix& mixture_mag,
                                                   const model::WienerConfig& wiener = {1.0, 1e-7, true}) {
  if (res.stems.size() != kNumStems)
    throw ConfigError("nmf: factorization result is not grouped into stems");
  model::StemMagnitudes est;
  for (const auto& s : res.stems) est.push_back({s});
  const auto refined = model::wiener_combine(est, {mixture_mag}, wiener);
  std::vector<RealMatrix> out;
  for (const auto& r : refined) out.push_back(r[0]);
  return out;
}

}  // namespace drumsep::nmf
