#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dppmle/kernel.hpp"
#include "dppmle/rng.hpp"

namespace dppmle {

enum class SamplerKind { spectral, enumeration };

std::string to_string(SamplerKind kind);
SamplerKind parse_sampler_kind(const std::string& name);

struct SampleBatch {
  int n_ground = 0;
  std::vector<Mask> draws;
  std::uint64_t seed = 0;
  SamplerKind sampler = SamplerKind::spectral;

  std::size_t size() const { return draws.size(); }
  Subset subset(std::size_t i) const { return Subset(draws[i], n_ground); }
};

// Exact sampler for DPP(L) built on the eigendecomposition of L: each
// eigenvector is kept independently with probability lambda / (1 + lambda),
// then items are drawn one by one from the projection DPP spanned by the
// kept eigenvectors.
class SpectralSampler {
 public:
  explicit SpectralSampler(const KernelMatrix& ensemble);

  Subset operator()(Rng& rng) const;

  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  // lambda_i / (1 + lambda_i) for every eigenvalue.
  const Eigen::VectorXd& inclusion_probabilities() const { return keep_; }

 private:
  int n_;
  Eigen::VectorXd eigenvalues_;
  Eigen::VectorXd keep_;
  Eigen::MatrixXd eigenvectors_;
};

// Inverse-CDF draw from an explicit probability table.
class EnumerationSampler {
 public:
  explicit EnumerationSampler(const DistributionTable& table);

  Subset operator()(Rng& rng) const;

 private:
  int n_;
  std::vector<double> cdf_;
  Mask last_positive_ = 0;
};

Subset spectral_sample(const KernelMatrix& ensemble, Rng& rng);
Subset enumeration_sample(const DistributionTable& table, Rng& rng);

// n independent draws from DPP(L); identical arguments give identical batches.
SampleBatch sample_batch(const KernelMatrix& ensemble, std::size_t n,
                         std::uint64_t seed, SamplerKind sampler);

// CSV with header `index,mask,items`; items are 0-based and ';'-separated.
void write_batch_csv(std::ostream& out, const SampleBatch& batch);
SampleBatch read_batch_csv(std::istream& in, int n_ground);

}  // namespace dppmle
