#pragma once

#include <algorithm>
#include <set>
#include <tuple>
#include <vector>

#include "pidlft/model.hpp"
#include "pidlft/rng.hpp"
#include "pidlft/sparse_tensor.hpp"

namespace test_helpers {

using namespace pidlft;

// Random tensor with distinct cells, values in [-2, 2).
inline SparseTensor random_tensor(TensorShape shape, std::size_t n_entries, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::set<std::tuple<Index, Index, Index>> cells;
    while (cells.size() < n_entries) {
        cells.insert({static_cast<Index>(rng.next_below(shape.n_stations)),
                      static_cast<Index>(rng.next_below(shape.n_metrics)),
                      static_cast<Index>(rng.next_below(shape.n_slots))});
    }
    std::vector<Entry> entries;
    for (const auto& [i, j, k] : cells) {
        entries.push_back(Entry{i, j, k, rng.next_uniform(-2.0, 2.0)});
    }
    return SparseTensor(shape, std::move(entries));
}

// Model with every parameter (biases included) drawn from [lo, hi).
inline Model random_model(TensorShape shape, int rank, std::uint64_t seed, double lo = 0.1,
                          double hi = 0.9) {
    Model m(shape, rank);
    SplitMix64 rng(seed);
    for (double& v : m.S) v = rng.next_uniform(lo, hi);
    for (double& v : m.M) v = rng.next_uniform(lo, hi);
    for (double& v : m.T) v = rng.next_uniform(lo, hi);
    for (double& v : m.a) v = rng.next_uniform(lo, hi);
    for (double& v : m.b) v = rng.next_uniform(lo, hi);
    for (double& v : m.c) v = rng.next_uniform(lo, hi);
    return m;
}

inline std::multiset<std::tuple<Index, Index, Index, double>> entry_multiset(
    const SparseTensor& t) {
    std::multiset<std::tuple<Index, Index, Index, double>> s;
    for (const Entry& e : t.entries()) s.insert({e.i, e.j, e.k, e.value});
    return s;
}

}  // namespace test_helpers
