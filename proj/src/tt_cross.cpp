#include "qttv/tt_cross.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_set>

#include <Eigen/LU>

#include "linalg.hpp"

namespace qttv {

using detail::Mat;

namespace detail {

template <class T>
std::vector<Eigen::Index> maxvol(const Mat<T>& u, double bound, std::size_t max_swaps) {
    const auto m = u.rows(), r = u.cols();
    if (r > m) throw InvalidArgument("maxvol: matrix must be tall");
    // Initial rows by Gaussian elimination with partial pivoting.
    std::vector<Eigen::Index> rows;
    {
        Mat<T> a = u;
        std::vector<bool> used(static_cast<std::size_t>(m), false);
        for (Eigen::Index j = 0; j < r; ++j) {
            Eigen::Index best = -1;
            double best_abs = -1.0;
            for (Eigen::Index i = 0; i < m; ++i) {
                if (used[static_cast<std::size_t>(i)]) continue;
                if (std::abs(a(i, j)) > best_abs) {
                    best_abs = std::abs(a(i, j));
                    best = i;
                }
            }
            used[static_cast<std::size_t>(best)] = true;
            rows.push_back(best);
            if (best_abs > 0.0) {
                const Eigen::Matrix<T, 1, Eigen::Dynamic> piv = a.row(best) / a(best, j);
                for (Eigen::Index i = 0; i < m; ++i)
                    if (!used[static_cast<std::size_t>(i)]) a.row(i) -= a(i, j) * piv;
            }
        }
    }
    Mat<T> sub(r, r);
    for (Eigen::Index j = 0; j < r; ++j) sub.row(j) = u.row(rows[static_cast<std::size_t>(j)]);
    Eigen::FullPivLU<Mat<T>> lu(sub.transpose());
    if (lu.rank() < r) return rows;  // rank-deficient input: elimination order is all we have
    Mat<T> b = lu.solve(Mat<T>(u.transpose())).transpose();  // b = u * sub^{-1}

    for (std::size_t swap = 0; swap < max_swaps; ++swap) {
        Eigen::Index i = 0, j = 0;
        const double big = b.cwiseAbs().maxCoeff(&i, &j);
        if (big <= bound) break;
        // Row i replaces pivot j; rank-one update of b.
        const Mat<T> col = b.col(j);
        Eigen::Matrix<T, 1, Eigen::Dynamic> row = b.row(i);
        row(j) -= T(1);
        b.noalias() -= (col / b(i, j)) * row;
        rows[static_cast<std::size_t>(j)] = i;
    }
    return rows;
}

template std::vector<Eigen::Index> maxvol(const Mat<double>&, double, std::size_t);
template std::vector<Eigen::Index> maxvol(const Mat<Complex>&, double, std::size_t);

}  // namespace detail

namespace {

template <class T>
class CrossBuilder {
public:
    CrossBuilder(const std::function<T(std::uint64_t)>& f, std::size_t d, const Tolerance& tol,
                 const CrossOptions& opts)
        : f_(f), d_(d), tol_(tol), opts_(opts), rng_(opts.seed), left_(d + 1), right_(d + 1) {
        thr_ = tol.rel_eps / std::sqrt(static_cast<double>(std::max<std::size_t>(d - 1, 1)));
        left_[0] = {0};
        right_[d] = {0};
        for (std::size_t p = 1; p < d; ++p) {
            const std::uint64_t range = std::uint64_t{1} << (d - p);
            const auto want = std::min<std::uint64_t>(std::max<std::size_t>(opts.initial_rank, 1),
                                                      range);
            std::uniform_int_distribution<std::uint64_t> pick(0, range - 1);
            std::unordered_set<std::uint64_t> seen;
            while (seen.size() < want) seen.insert(pick(rng_));
            right_[p].assign(seen.begin(), seen.end());
            std::sort(right_[p].begin(), right_[p].end());
        }
        make_samples();
    }

    TensorTrain<T> run(CrossStats* stats) {
        std::vector<std::size_t> prev_ranks;
        bool prev_ok = false;
        double err = 0.0;
        for (std::size_t sweep = 1; sweep <= opts_.max_sweeps; ++sweep) {
            TensorTrain<T> tt = sweep_left_to_right();
            err = sample_error(tt);
            const bool ok = err <= tol_.rel_eps;
            const auto ranks = tt.ranks();
            if (stats) {
                stats->sweeps = sweep;
                stats->sample_error = err;
                stats->oracle_calls = calls_;
            }
            if (ok && (ranks == prev_ranks || prev_ok)) return round(tt, tol_);
            prev_ok = ok;
            prev_ranks = ranks;
            sweep_right_to_left();
        }
        throw ConvergenceError("qtt_from_oracle: no convergence within " +
                                   std::to_string(opts_.max_sweeps) + " sweeps",
                               opts_.max_sweeps, err, prev_ranks);
    }

private:
    T eval(std::uint64_t k) {
        ++calls_;
        return f_(k);
    }

    // Two-site block at modes p, p+1: rows alpha + r_p k_p, cols beta + r_{p+2} k_{p+1}.
    Mat<T> supercore(std::size_t p) {
        const auto& il = left_[p];
        const auto& jr = right_[p + 2];
        const auto rl = static_cast<Eigen::Index>(il.size());
        const auto rr = static_cast<Eigen::Index>(jr.size());
        Mat<T> s(2 * rl, 2 * rr);
        for (Eigen::Index k1 = 0; k1 < 2; ++k1)
            for (Eigen::Index beta = 0; beta < rr; ++beta)
                for (Eigen::Index k0 = 0; k0 < 2; ++k0)
                    for (Eigen::Index alpha = 0; alpha < rl; ++alpha) {
                        const std::uint64_t k =
                            il[static_cast<std::size_t>(alpha)] +
                            (static_cast<std::uint64_t>(k0) << p) +
                            (static_cast<std::uint64_t>(k1) << (p + 1)) +
                            (jr[static_cast<std::size_t>(beta)] << (p + 2));
                        s(alpha + rl * k0, beta + rr * k1) = eval(k);
                    }
        return s;
    }

    // Truncated factorization plus `rank_kick` extra directions, so the index
    // sets keep exploring entries the current interpolant does not see.
    detail::LowRank<T> kicked_svd(const Mat<T>& s, std::size_t p) const {
        Eigen::BDCSVD<Mat<T>> svd(s, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::VectorXd sv = svd.singularValues();
        const std::size_t need = detail::truncation_rank(sv, thr_);
        if (tol_.max_rank && need > *tol_.max_rank)
            throw RankLimitExceeded(p + 1, need, *tol_.max_rank, "qtt_from_oracle");
        std::size_t keep = std::min<std::size_t>(need + opts_.rank_kick,
                                                 static_cast<std::size_t>(sv.size()));
        if (tol_.max_rank) keep = std::min(keep, *tol_.max_rank);
        const auto r = static_cast<Eigen::Index>(keep);
        return {svd.matrixU().leftCols(r), sv.head(r), svd.matrixV().leftCols(r)};
    }

    TensorTrain<T> sweep_left_to_right() {
        using Core = typename TensorTrain<T>::Core;
        std::vector<Core> cores(d_);
        for (std::size_t p = 0; p + 1 < d_; ++p) {
            const Mat<T> s = supercore(p);
            const auto lr = kicked_svd(s, p);
            const auto rows = detail::maxvol<T>(lr.U);
            const auto r = static_cast<Eigen::Index>(rows.size());
            Mat<T> pivots(r, r);
            for (Eigen::Index j = 0; j < r; ++j)
                pivots.row(j) = lr.U.row(rows[static_cast<std::size_t>(j)]);
            const Mat<T> interp =
                Eigen::FullPivLU<Mat<T>>(pivots.transpose())
                    .solve(Mat<T>(lr.U.transpose()))
                    .transpose();
            cores[p] = detail::from_left_unfold<T>(interp);

            const auto rl = left_[p].size();
            std::vector<std::uint64_t> next(rows.size());
            for (std::size_t j = 0; j < rows.size(); ++j) {
                const auto row = static_cast<std::size_t>(rows[j]);
                next[j] = left_[p][row % rl] + (static_cast<std::uint64_t>(row / rl) << p);
            }
            left_[p + 1] = std::move(next);

            if (p + 2 == d_) {
                Mat<T> last(r, 2);
                for (Eigen::Index j = 0; j < r; ++j)
                    last.row(j) = s.row(rows[static_cast<std::size_t>(j)]);
                cores[d_ - 1] = Core{Mat<T>(last.col(0)), Mat<T>(last.col(1))};
            }
        }
        return TensorTrain<T>(std::move(cores));
    }

    void sweep_right_to_left() {
        for (std::size_t p = d_ - 1; p-- > 0;) {
            const Mat<T> s = supercore(p);
            const auto lr = kicked_svd(s, p);
            const auto cols = detail::maxvol<T>(lr.V);
            const auto rr = right_[p + 2].size();
            std::vector<std::uint64_t> next(cols.size());
            for (std::size_t j = 0; j < cols.size(); ++j) {
                const auto c = static_cast<std::size_t>(cols[j]);
                next[j] = static_cast<std::uint64_t>(c / rr) + 2 * right_[p + 2][c % rr];
            }
            right_[p + 1] = std::move(next);
        }
    }

    void make_samples() {
        const std::uint64_t n = std::uint64_t{1} << d_;
        samples_ = {0, n - 1};
        std::uniform_int_distribution<std::uint64_t> uniform(0, n - 1);
        std::uniform_real_distribution<double> expo(0.0, std::log(static_cast<double>(n)));
        for (std::size_t i = 0; i < opts_.check_samples; ++i) {
            if (i % 2 == 0) {
                samples_.push_back(uniform(rng_));
            } else {
                const auto k = static_cast<std::uint64_t>(std::exp(expo(rng_))) - 1;
                samples_.push_back(std::min(k, n - 1));
            }
        }
        std::sort(samples_.begin(), samples_.end());
        samples_.erase(std::unique(samples_.begin(), samples_.end()), samples_.end());
        sample_values_.clear();
        for (auto k : samples_) sample_values_.push_back(eval(k));
    }

    double sample_error(const TensorTrain<T>& tt) const {
        double sq = 0.0;
        for (std::size_t i = 0; i < samples_.size(); ++i)
            sq += std::norm(tt.element(samples_[i]) - sample_values_[i]);
        const double rms = std::sqrt(sq / static_cast<double>(samples_.size()));
        const double scale = norm(tt) / std::sqrt(static_cast<double>(tt.size()));
        if (scale == 0.0) return rms == 0.0 ? 0.0 : INFINITY;
        return rms / scale;
    }

    const std::function<T(std::uint64_t)>& f_;
    std::size_t d_;
    Tolerance tol_;
    CrossOptions opts_;
    std::mt19937_64 rng_;
    double thr_ = 0.0;
    std::uint64_t calls_ = 0;
    std::vector<std::vector<std::uint64_t>> left_;   // low-bit values, bits 0..p-1
    std::vector<std::vector<std::uint64_t>> right_;  // high-bit values, bits p..d-1
    std::vector<std::uint64_t> samples_;
    std::vector<T> sample_values_;
};

}  // namespace

template <class T>
TensorTrain<T> qtt_from_oracle(const std::function<T(std::uint64_t)>& f, std::size_t d,
                               const Tolerance& tol, const CrossOptions& opts,
                               CrossStats* stats) {
    tol.validate();
    if (d < 1 || d > 62) throw InvalidArgument("qtt_from_oracle: d must be in [1, 62]");
    if (!f) throw InvalidArgument("qtt_from_oracle: empty accessor");
    if (d == 1) {
        using Core = typename TensorTrain<T>::Core;
        Core c{Mat<T>::Constant(1, 1, f(0)), Mat<T>::Constant(1, 1, f(1))};
        if (stats) *stats = CrossStats{2, 0, 0.0};
        return TensorTrain<T>(std::vector<Core>{std::move(c)});
    }
    CrossBuilder<T> builder(f, d, tol, opts);
    return builder.run(stats);
}

template TTVector qtt_from_oracle(const std::function<double(std::uint64_t)>&, std::size_t,
                                  const Tolerance&, const CrossOptions&, CrossStats*);
template TTVectorC qtt_from_oracle(const std::function<Complex(std::uint64_t)>&, std::size_t,
                                   const Tolerance&, const CrossOptions&, CrossStats*);

TTVector qtt_from_function(const std::function<double(std::uint64_t)>& f, std::size_t d,
                           const Tolerance& tol) {
    if (d <= kDenseBuildModes) {
        std::vector<double> v(std::size_t{1} << d);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(i);
        return quantize<double>(v, tol);
    }
    return qtt_from_oracle<double>(f, d, tol);
}

}  // namespace qttv
