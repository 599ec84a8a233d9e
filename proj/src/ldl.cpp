#include "ldl.hpp"

#include "maropf/errors.hpp"

#include <Eigen/OrderingMethods>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace maropf::detail {

void QuasiDefiniteLdl::analyze(const Eigen::SparseMatrix<double>& pattern, std::vector<int> signs) {
    n_ = static_cast<int>(pattern.rows());
    const int n = n_;

    Eigen::SparseMatrix<double> sym = pattern.selfadjointView<Eigen::Upper>();
    Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> pinv;
    Eigen::AMDOrdering<int> amd;
    amd(sym, pinv);
    old_of_new_.assign(pinv.indices().data(), pinv.indices().data() + n);
    new_of_old_.assign(n, 0);
    for (int k = 0; k < n; ++k) new_of_old_[old_of_new_[k]] = k;

    signs_.resize(n);
    for (int k = 0; k < n; ++k) signs_[k] = signs[old_of_new_[k]];

    // Permuted upper triangle, remembering where each entry comes from in pattern's storage.
    struct Entry {
        int col, row, src;
    };
    std::vector<Entry> entries;
    entries.reserve(pattern.nonZeros());
    for (int j = 0; j < pattern.outerSize(); ++j) {
        for (int p = pattern.outerIndexPtr()[j]; p < pattern.outerIndexPtr()[j + 1]; ++p) {
            int i = pattern.innerIndexPtr()[p];
            if (i > j) continue;  // upper part carries the data
            int a = new_of_old_[i], b = new_of_old_[j];
            entries.push_back({std::max(a, b), std::min(a, b), p});
        }
    }
    std::sort(entries.begin(), entries.end(),
              [](const Entry& x, const Entry& y) { return x.col != y.col ? x.col < y.col : x.row < y.row; });
    Ap_.assign(n + 1, 0);
    Ai_.resize(entries.size());
    map_.resize(entries.size());
    Ax_.assign(entries.size(), 0.0);
    for (std::size_t k = 0; k < entries.size(); ++k) {
        Ap_[entries[k].col + 1]++;
        Ai_[k] = entries[k].row;
        map_[k] = entries[k].src;
    }
    std::partial_sum(Ap_.begin(), Ap_.end(), Ap_.begin());

    // Elimination tree and column counts.
    etree_.assign(n, -1);
    Lnz_.assign(n, 0);
    std::vector<int> work(n, -1);
    for (int j = 0; j < n; ++j) {
        work[j] = j;
        for (int p = Ap_[j]; p < Ap_[j + 1]; ++p) {
            int i = Ai_[p];
            while (work[i] != j) {
                if (etree_[i] == -1) etree_[i] = j;
                Lnz_[i]++;
                work[i] = j;
                i = etree_[i];
            }
        }
    }
    Lp_.assign(n + 1, 0);
    for (int i = 0; i < n; ++i) Lp_[i + 1] = Lp_[i] + Lnz_[i];
    Li_.assign(Lp_.back(), 0);
    Lx_.assign(Lp_.back(), 0.0);
    D_.assign(n, 0.0);
    Dinv_.assign(n, 0.0);
    marker_.assign(n, 0);
    yidx_.assign(n, 0);
    elim_.assign(n, 0);
    next_.assign(n, 0);
    y_.assign(n, 0.0);
    tmp_.resize(n);
}

int QuasiDefiniteLdl::factor(const Eigen::SparseMatrix<double>& K, double eps, double delta) {
    const int n = n_;
    const double* vals = K.valuePtr();
    for (std::size_t k = 0; k < map_.size(); ++k) Ax_[k] = vals[map_[k]];

    int regularized = 0;
    for (int i = 0; i < n; ++i) next_[i] = Lp_[i];

    for (int k = 0; k < n; ++k) {
        int nnzY = 0;
        double dk = 0.0;
        for (int p = Ap_[k]; p < Ap_[k + 1]; ++p) {
            int b = Ai_[p];
            if (b == k) {
                dk = Ax_[p];
                continue;
            }
            y_[b] = Ax_[p];
            if (marker_[b]) continue;
            marker_[b] = 1;
            int ne = 0;
            elim_[ne++] = b;
            int nx = etree_[b];
            while (nx != -1 && nx < k) {
                if (marker_[nx]) break;
                marker_[nx] = 1;
                elim_[ne++] = nx;
                nx = etree_[nx];
            }
            while (ne > 0) yidx_[nnzY++] = elim_[--ne];
        }
        for (int t = nnzY - 1; t >= 0; --t) {
            int c = yidx_[t];
            int slot = next_[c];
            double yc = y_[c];
            for (int j = Lp_[c]; j < slot; ++j)
                y_[Li_[j]] -= Lx_[j] * yc;
            Li_[slot] = k;
            double l = yc * Dinv_[c];
            Lx_[slot] = l;
            dk -= yc * l;
            next_[c]++;
            y_[c] = 0.0;
            marker_[c] = 0;
        }
        int sgn = signs_[k];
        if (!std::isfinite(dk)) throw Error(ErrorCode::NumericalBreakdown, "non-finite pivot in KKT factorization");
        if (sgn * dk <= eps) {
            dk = sgn * delta;
            ++regularized;
        }
        D_[k] = dk;
        Dinv_[k] = 1.0 / dk;
    }
    return regularized;
}

void QuasiDefiniteLdl::solve(Eigen::VectorXd& rhs) const {
    const int n = n_;
    for (int k = 0; k < n; ++k) tmp_(k) = rhs(old_of_new_[k]);
    for (int i = 0; i < n; ++i) {
        double xi = tmp_(i);
        if (xi == 0.0) continue;
        for (int j = Lp_[i]; j < Lp_[i + 1]; ++j)
            tmp_(Li_[j]) -= Lx_[j] * xi;
    }
    for (int i = 0; i < n; ++i) tmp_(i) *= Dinv_[i];
    for (int i = n - 1; i >= 0; --i) {
        double s = tmp_(i);
        for (int j = Lp_[i]; j < Lp_[i + 1]; ++j)
            s -= Lx_[j] * tmp_(Li_[j]);
        tmp_(i) = s;
    }
    for (int k = 0; k < n; ++k) rhs(old_of_new_[k]) = tmp_(k);
}

}  // namespace maropf::detail
