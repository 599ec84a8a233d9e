#pragma once

// Sparse LDL^T for symmetric quasi-definite matrices (left-looking, elimination
// tree based), with a fill-reducing AMD permutation and sign-aware dynamic
// regularization of the pivots.

#include <Eigen/Sparse>

#include <vector>

namespace maropf::detail {

class QuasiDefiniteLdl {
public:
    // pattern: full symmetric (or upper) sparsity of K; signs: +1 / -1 expected pivot sign per row.
    void analyze(const Eigen::SparseMatrix<double>& pattern, std::vector<int> signs);
    // K must have the pattern given to analyze. Returns the number of pivots that were regularized.
    int factor(const Eigen::SparseMatrix<double>& K, double eps = 1e-13, double delta = 7e-8);
    void solve(Eigen::VectorXd& rhs) const;

    int size() const { return n_; }
    long factor_nonzeros() const { return static_cast<long>(Li_.size()); }

private:
    int n_ = 0;
    std::vector<int> old_of_new_;
    std::vector<int> new_of_old_;
    std::vector<int> signs_;  // in permuted order
    // Upper-triangular CSC of the permuted matrix; map_[k] = index into K's valuePtr for entry k.
    std::vector<int> Ap_, Ai_;
    std::vector<int> map_;
    std::vector<double> Ax_;
    std::vector<int> etree_, Lnz_, Lp_, Li_;
    std::vector<double> Lx_, D_, Dinv_;
    // Scratch.
    std::vector<char> marker_;
    std::vector<int> yidx_, elim_, next_;
    std::vector<double> y_;
    mutable Eigen::VectorXd tmp_;
};

}  // namespace maropf::detail
