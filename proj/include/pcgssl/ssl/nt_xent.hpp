#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "pcgssl/nn/tape.hpp"

namespace pcgssl::ssl {

inline constexpr double kMinEmbeddingNorm = 1e-12;

/// Normalised temperature-scaled cross-entropy over 2N embeddings where rows
/// i and i + N are positives of each other. Rows are L2-normalised, pairwise
/// similarities s(i, k) = cos(z_i, z_k) / temperature, and
///   loss = mean_i [ -s(i, pos(i)) + log sum_{k != i} exp(s(i, k)) ].
/// Computed in double precision whatever T is.
template <std::floating_point T>
nn::Var<T> nt_xent_loss(const nn::Var<T>& z, double temperature) {
  const auto& s = z.shape();
  if (s.size() != 2 || s[0] < 2 || s[0] % 2 != 0) {
    fail(Errc::ShapeMismatch, "nt_xent_loss expects [2N, dim], got " + nn::shape_string(s));
  }
  require(temperature > 0.0, Errc::InvalidArgument, "temperature must be positive");
  const std::size_t rows = s[0], dim = s[1], pairs = rows / 2;

  std::vector<double> unit(rows * dim), norms(rows);
  const T* zv = z.value().ptr();
  for (std::size_t i = 0; i < rows; ++i) {
    double n2 = 0.0;
    for (std::size_t d = 0; d < dim; ++d) n2 += static_cast<double>(zv[i * dim + d]) * zv[i * dim + d];
    norms[i] = std::sqrt(n2);
    if (!(norms[i] >= kMinEmbeddingNorm)) fail(Errc::DegenerateEmbedding, "embedding row " + std::to_string(i) + " has (near) zero norm");
    for (std::size_t d = 0; d < dim; ++d) unit[i * dim + d] = zv[i * dim + d] / norms[i];
  }

  // prob[i, k]: softmax of s(i, .) over k != i; prob[i, i] = 0.
  std::vector<double> prob(rows * rows, 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    double* p = prob.data() + i * rows;
    for (std::size_t k = 0; k < rows; ++k) {
      if (k == i) continue;
      double dot = 0.0;
      for (std::size_t d = 0; d < dim; ++d) dot += unit[i * dim + d] * unit[k * dim + d];
      p[k] = dot / temperature;
    }
    const std::size_t pos = (i + pairs) % rows;
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < rows; ++k) {
      if (k != i) m = std::max(m, p[k]);
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < rows; ++k) {
      if (k != i) sum += std::exp(p[k] - m);
    }
    const double positive = p[pos];
    loss += m + std::log(sum) - positive;
    for (std::size_t k = 0; k < rows; ++k) p[k] = k == i ? 0.0 : std::exp(p[k] - m) / sum;
  }
  loss /= static_cast<double>(rows);

  const std::size_t zid = z.id();
  return z.tape().record(
      nn::Tensor<T>::scalar(static_cast<T>(loss)), {zid},
      [=, unit = std::move(unit), norms = std::move(norms), prob = std::move(prob)](nn::Tape<T>& tape, std::size_t self) {
        const double g = tape.grad(self)[0] / static_cast<double>(rows);
        // d loss / d s(i, k), then through s = u_i . u_k / temperature.
        std::vector<double> du(rows * dim, 0.0);
        for (std::size_t i = 0; i < rows; ++i) {
          const std::size_t pos = (i + pairs) % rows;
          for (std::size_t k = 0; k < rows; ++k) {
            if (k == i) continue;
            const double ds = g * (prob[i * rows + k] - (k == pos ? 1.0 : 0.0)) / temperature;
            if (ds == 0.0) continue;
            for (std::size_t d = 0; d < dim; ++d) {
              du[i * dim + d] += ds * unit[k * dim + d];
              du[k * dim + d] += ds * unit[i * dim + d];
            }
          }
        }
        auto dz = tape.grad(zid);
        for (std::size_t i = 0; i < rows; ++i) {
          double radial = 0.0;
          for (std::size_t d = 0; d < dim; ++d) radial += unit[i * dim + d] * du[i * dim + d];
          for (std::size_t d = 0; d < dim; ++d) {
            dz[i * dim + d] += static_cast<T>((du[i * dim + d] - unit[i * dim + d] * radial) / norms[i]);
          }
        }
      });
}

/// Loss value only.
template <std::floating_point T>
double nt_xent_value(const nn::Tensor<T>& z, double temperature) {
  nn::Tape<T> tape(false);
  return static_cast<double>(nt_xent_loss(tape.constant(z), temperature).value().item());
}

}  // namespace pcgssl::ssl
