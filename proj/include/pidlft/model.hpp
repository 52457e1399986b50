#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pidlft/sparse_tensor.hpp"

namespace pidlft {

// Seeded uniform initialization on [low, high) for the factor matrices;
// biases always start at zero.
struct InitScheme {
    double low = 0.0;
    double high = 0.05;
    std::uint64_t seed = 0;

    void validate() const;  // requires low < high
};

// Bias-extended rank-R factorization. Factor matrices are flat row-major
// (row i of S starts at S[i * rank]); biases are one value per index.
class Model {
public:
    Model(TensorShape shape, int rank);  // zero-filled
    static Model init(const TensorShape& shape, int rank, const InitScheme& scheme);

    const TensorShape& shape() const { return shape_; }
    int rank() const { return rank_; }

    double* s_row(Index i) { return S.data() + i * rank_; }
    double* m_row(Index j) { return M.data() + j * rank_; }
    double* t_row(Index k) { return T.data() + k * rank_; }
    const double* s_row(Index i) const { return S.data() + i * rank_; }
    const double* m_row(Index j) const { return M.data() + j * rank_; }
    const double* t_row(Index k) const { return T.data() + k * rank_; }

    // sum_r s_ir * m_jr * t_kr + a_i + b_j + c_k
    double predict(Index i, Index j, Index k) const;

    // Regularized squared-error objective over the given entries:
    //   1/2 * sum [ (y - yhat)^2 + lambda * sum_r (s^2 + m^2 + t^2 + a^2 + b^2 + c^2) ]
    // The bias squares sit inside the rank sum, so they are scaled by R.
    // bias_reg_outside_rank=true instead counts each bias square once, which
    // is the objective whose gradient the per-entry update rule follows.
    double loss(const SparseTensor& data, double lambda, bool bias_reg_outside_rank = false) const;

    void check_entry(const Entry& e) const;  // throws if outside shape

    std::vector<double> S;  // |I| x R
    std::vector<double> M;  // |J| x R
    std::vector<double> T;  // |K| x R
    std::vector<double> a;  // |I|
    std::vector<double> b;  // |J|
    std::vector<double> c;  // |K|

private:
    TensorShape shape_;
    int rank_ = 0;
};

// Text serialization: magic line, `I J K R` header, then S, M, T row per
// line and a, b, c one line each, all with 17 significant digits.
void save_model(const Model& m, std::ostream& out);
Model load_model(std::istream& in);
void save_model_file(const Model& m, const std::string& path);
Model load_model_file(const std::string& path);

}  // namespace pidlft
