#include "selrag/error.hpp"
#include "selrag/retrieval.hpp"

#include <cmath>
#include <vector>

namespace selrag::retrieval {

namespace {

double naive_cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i] * a[i];
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) {
    throw Error(ErrorCode::zero_vector, "zero vector in brute-force scan");
  }
  double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return c > 1.0 ? 1.0 : (c < -1.0 ? -1.0 : c);
}

} // namespace

std::vector<RankedId> brute_force_topk(const CodebaseIndex& index, const embed::FeatureVector& query,
                                       std::size_t k) {
  if (query.dim() != index.embedder_spec().dim) {
    throw Error(ErrorCode::dimension_mismatch, "query dim does not match index");
  }
  std::vector<RankedId> pool;
  for (const auto& entry : index.entries()) {
    pool.push_back({entry.pair.id, naive_cosine(index.scoring_vector(entry).values(), query.values())});
  }
  std::vector<bool> taken(pool.size(), false);
  std::vector<RankedId> out;
  while (out.size() < k && out.size() < pool.size()) {
    std::size_t best = pool.size();
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (taken[i]) {
        continue;
      }
      if (best == pool.size() || pool[i].similarity > pool[best].similarity ||
          (pool[i].similarity == pool[best].similarity && pool[i].id < pool[best].id)) {
        best = i;
      }
    }
    taken[best] = true;
    out.push_back(pool[best]);
  }
  return out;
}

} // namespace selrag::retrieval
