#include "dppmle/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "dppmle/error.hpp"

namespace dppmle {

std::string to_string(SamplerKind kind) {
  return kind == SamplerKind::spectral ? "spectral" : "enumeration";
}

SamplerKind parse_sampler_kind(const std::string& name) {
  if (name == "spectral") return SamplerKind::spectral;
  if (name == "enumeration") return SamplerKind::enumeration;
  throw InvalidArgument("unknown sampler '" + name + "'");
}

SpectralSampler::SpectralSampler(const KernelMatrix& ensemble)
    : n_(ensemble.size()) {
  if (ensemble.kind() != KernelKind::ensemble) {
    throw InvalidArgument("spectral sampler expects an ensemble kernel");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ensemble.matrix());
  if (eig.info() != Eigen::Success) {
    throw EigendecompositionFailure("eigendecomposition did not converge");
  }
  eigenvalues_ = eig.eigenvalues().cwiseMax(0.0);
  keep_ = eigenvalues_.array() / (1.0 + eigenvalues_.array());
  eigenvectors_ = eig.eigenvectors();
}

Subset SpectralSampler::operator()(Rng& rng) const {
  std::vector<int> chosen;
  for (int i = 0; i < n_; ++i) {
    if (uniform01(rng) < keep_(i)) chosen.push_back(i);
  }
  Mask mask = 0;
  if (chosen.empty()) return Subset(mask, n_);

  Eigen::MatrixXd v(n_, static_cast<Eigen::Index>(chosen.size()));
  for (std::size_t c = 0; c < chosen.size(); ++c) {
    v.col(static_cast<Eigen::Index>(c)) = eigenvectors_.col(chosen[c]);
  }

  std::vector<double> weight(n_);
  while (v.cols() > 0) {
    const double k = static_cast<double>(v.cols());
    double total = 0.0;
    for (int i = 0; i < n_; ++i) {
      double w = ((mask >> i) & 1u) ? 0.0 : v.row(i).squaredNorm() / k;
      w = std::clamp(w, 0.0, 1.0);
      weight[i] = w;
      total += w;
    }
    const double u = uniform01(rng) * total;
    int item = -1;
    double acc = 0.0;
    for (int i = 0; i < n_; ++i) {
      if (weight[i] <= 0.0) continue;
      acc += weight[i];
      item = i;
      if (u < acc) break;
    }
    if (item < 0) break;
    mask |= Mask{1} << item;

    // Eliminate the chosen coordinate: pivot on the column with the largest
    // entry in row `item`, remove it, and re-orthonormalize the rest.
    Eigen::Index pivot = 0;
    v.row(item).cwiseAbs().maxCoeff(&pivot);
    const Eigen::VectorXd pv = v.col(pivot);
    const double pe = pv(item);
    Eigen::MatrixXd rest(n_, v.cols() - 1);
    for (Eigen::Index c = 0, r = 0; c < v.cols(); ++c) {
      if (c == pivot) continue;
      rest.col(r++) = v.col(c) - (v(item, c) / pe) * pv;
    }
    for (Eigen::Index c = 0; c < rest.cols(); ++c) {
      for (Eigen::Index p = 0; p < c; ++p) {
        rest.col(c) -= rest.col(p).dot(rest.col(c)) * rest.col(p);
      }
      const double nrm = rest.col(c).norm();
      if (nrm > 0.0) rest.col(c) /= nrm;
    }
    v = std::move(rest);
  }
  return Subset(mask, n_);
}

EnumerationSampler::EnumerationSampler(const DistributionTable& table)
    : n_(table.ground_size()), cdf_(table.size()) {
  double acc = 0.0;
  for (Mask m = 0; m < table.size(); ++m) {
    acc += table[m];
    cdf_[m] = acc;
    if (table[m] > 0.0) last_positive_ = m;
  }
}

Subset EnumerationSampler::operator()(Rng& rng) const {
  const double u = uniform01(rng) * cdf_.back();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  Mask m = static_cast<Mask>(it - cdf_.begin());
  if (m > last_positive_) m = last_positive_;
  return Subset(m, n_);
}

Subset spectral_sample(const KernelMatrix& ensemble, Rng& rng) {
  return SpectralSampler(ensemble)(rng);
}

Subset enumeration_sample(const DistributionTable& table, Rng& rng) {
  return EnumerationSampler(table)(rng);
}

SampleBatch sample_batch(const KernelMatrix& ensemble, std::size_t n,
                         std::uint64_t seed, SamplerKind sampler) {
  if (n == 0) throw InvalidArgument("sample size must be positive");
  SampleBatch batch{ensemble.size(), {}, seed, sampler};
  batch.draws.reserve(n);
  Rng rng = make_rng(seed);
  if (sampler == SamplerKind::spectral) {
    const SpectralSampler draw(ensemble);
    for (std::size_t i = 0; i < n; ++i) batch.draws.push_back(draw(rng).mask);
  } else {
    const EnumerationSampler draw(enumerate_distribution(ensemble));
    for (std::size_t i = 0; i < n; ++i) batch.draws.push_back(draw(rng).mask);
  }
  return batch;
}

void write_batch_csv(std::ostream& out, const SampleBatch& batch) {
  out << "index,mask,items\n";
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out << i << ',' << batch.draws[i] << ',';
    bool first = true;
    for (int item : batch.subset(i).items()) {
      if (!first) out << ';';
      out << item;
      first = false;
    }
    out << '\n';
  }
}

SampleBatch read_batch_csv(std::istream& in, int n_ground) {
  std::string line;
  if (!std::getline(in, line) || line != "index,mask,items") {
    throw ParseError("batch CSV must start with header index,mask,items");
  }
  SampleBatch batch{n_ground, {}, 0, SamplerKind::spectral};
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string index, mask, items;
    if (!std::getline(ss, index, ',') || !std::getline(ss, mask, ',')) {
      throw ParseError("malformed batch row " + std::to_string(row));
    }
    std::getline(ss, items);
    Mask m = std::stoull(mask);
    Mask from_items = 0;
    std::istringstream is(items);
    std::string tok;
    while (std::getline(is, tok, ';')) {
      if (!tok.empty()) from_items |= Mask{1} << std::stoi(tok);
    }
    if (m != from_items) {
      throw ParseError("row " + std::to_string(row) +
                       ": mask and items disagree");
    }
    batch.draws.push_back(Subset(m, n_ground).mask);
    ++row;
  }
  return batch;
}

}  // namespace dppmle
