#include "epcluster/eigensolver.hpp"
#include "epcluster/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace epcluster {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

double abs1(const Complex& z) { return std::abs(z.real()) + std::abs(z.imag()); }

// Unitary G = [[c, s], [-conj(s), c]] with G * [x; y] = [r; 0].
struct Givens {
    double c = 1.0;
    Complex s{0.0, 0.0};

    static Givens zeroing(const Complex& x, const Complex& y) {
        Givens g;
        const double ay = std::abs(y);
        if (ay == 0.0) {
            return g;
        }
        const double ax = std::abs(x);
        if (ax == 0.0) {
            g.c = 0.0;
            g.s = std::conj(y) / ay;
            return g;
        }
        const double norm = std::hypot(ax, ay);
        const Complex phase = x / ax;
        g.c = ax / norm;
        g.s = phase * std::conj(y) / norm;
        return g;
    }

    // rows (p, q) <- G * rows (p, q), columns [c0, c1)
    void apply_left(Eigen::MatrixXcd& m, Eigen::Index p, Eigen::Index q, Eigen::Index c0, Eigen::Index c1) const {
        for (Eigen::Index j = c0; j < c1; ++j) {
            const Complex a = m(p, j);
            const Complex b = m(q, j);
            m(p, j) = c * a + s * b;
            m(q, j) = -std::conj(s) * a + c * b;
        }
    }

    // columns (p, q) <- columns (p, q) * G^H, rows [r0, r1)
    void apply_right(Eigen::MatrixXcd& m, Eigen::Index p, Eigen::Index q, Eigen::Index r0, Eigen::Index r1) const {
        for (Eigen::Index i = r0; i < r1; ++i) {
            const Complex a = m(i, p);
            const Complex b = m(i, q);
            m(i, p) = a * c + b * std::conj(s);
            m(i, q) = -a * s + b * c;
        }
    }
};

void reduce_to_hessenberg(Eigen::MatrixXcd& a, Eigen::MatrixXcd& z) {
    const Eigen::Index n = a.rows();
    for (Eigen::Index k = 0; k + 2 < n; ++k) {
        const Eigen::Index m = n - k - 1;
        Eigen::VectorXcd v = a.col(k).segment(k + 1, m);
        if (v.tail(m - 1).norm() == 0.0) {
            continue;
        }
        const double xnorm = v.norm();
        const Complex alpha = (v(0) == Complex(0.0)) ? Complex(-xnorm) : -std::polar(xnorm, std::arg(v(0)));
        v(0) -= alpha;
        v.normalize();

        // Reflector P = I - 2 v v^H applied as P A P.
        Eigen::RowVectorXcd w = v.adjoint() * a.block(k + 1, k, m, n - k);
        a.block(k + 1, k, m, n - k).noalias() -= 2.0 * v * w;
        Eigen::VectorXcd u = a.block(0, k + 1, n, m) * v;
        a.block(0, k + 1, n, m).noalias() -= 2.0 * u * v.adjoint();
        Eigen::VectorXcd uz = z.block(0, k + 1, n, m) * v;
        z.block(0, k + 1, n, m).noalias() -= 2.0 * uz * v.adjoint();

        a(k + 1, k) = alpha;
        a.col(k).segment(k + 2, m - 1).setZero();
    }
}

// Eigenvalue of the trailing 2x2 block of the active window closest to a(hi, hi).
Complex wilkinson_shift(const Eigen::MatrixXcd& a, Eigen::Index hi) {
    const Complex p = 0.5 * (a(hi - 1, hi - 1) - a(hi, hi));
    const Complex bc = a(hi - 1, hi) * a(hi, hi - 1);
    Complex disc = std::sqrt(p * p + bc);
    if ((std::conj(p) * disc).real() < 0.0) {
        disc = -disc;
    }
    const Complex denom = p + disc;
    if (denom == Complex(0.0)) {
        return a(hi, hi);
    }
    return a(hi, hi) - bc / denom;
}

void fix_phase(Eigen::Ref<Eigen::VectorXcd> v) {
    double best = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        best = std::max(best, std::abs(v(i)));
    }
    if (best == 0.0) {
        return;
    }
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const double mag = std::abs(v(i));
        if (mag >= best * (1.0 - 1e-12)) {
            v *= std::conj(v(i)) / mag;
            v(i) = Complex(mag, 0.0);
            return;
        }
    }
}

Eigen::VectorXcd inverse_iteration(const Eigen::MatrixXcd& a, Complex lambda, Eigen::Index j, double anorm) {
    const Eigen::Index n = a.rows();
    const double delta = 1e3 * kEps * std::max(anorm, 1.0);
    const Eigen::MatrixXcd shifted = a - (lambda + Complex(delta, delta)) * Eigen::MatrixXcd::Identity(n, n);
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(shifted);

    std::mt19937_64 rng(0x5eedULL + static_cast<std::uint64_t>(j));
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Eigen::VectorXcd x(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x(i) = Complex(unif(rng), unif(rng));
    }
    x.normalize();
    for (int it = 0; it < 3; ++it) {
        Eigen::VectorXcd y = lu.solve(x);
        const double ny = y.norm();
        if (!std::isfinite(ny) || ny == 0.0) {
            break;
        }
        x = y / ny;
    }
    return x;
}

} // namespace

BalancedMatrix balance(const Eigen::MatrixXcd& a) {
    constexpr double radix = 2.0;
    constexpr double radix_sq = radix * radix;
    const Eigen::Index n = a.rows();
    BalancedMatrix out{a, Eigen::VectorXd::Ones(n)};
    auto& m = out.matrix;

    bool done = false;
    while (!done) {
        done = true;
        for (Eigen::Index i = 0; i < n; ++i) {
            double c = 0.0;
            double r = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j == i) continue;
                c += abs1(m(j, i));
                r += abs1(m(i, j));
            }
            if (c == 0.0 || r == 0.0) {
                continue;
            }
            const double s = c + r;
            double f = 1.0;
            double g = r / radix;
            while (c < g) {
                f *= radix;
                c *= radix_sq;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= radix_sq;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                out.scale(i) *= f;
                m.row(i) /= f;
                m.col(i) *= f;
            }
        }
    }
    return out;
}

SchurForm complex_schur(const Eigen::MatrixXcd& input, const EigOptions& opts) {
    if (input.rows() != input.cols()) {
        throw InvalidArgument("complex_schur: matrix must be square");
    }
    if (!(opts.tol > 0.0)) {
        throw InvalidArgument("complex_schur: tol must be positive");
    }
    if (!input.allFinite()) {
        throw InvalidArgument("complex_schur: matrix has non-finite entries");
    }
    const Eigen::Index n = input.rows();
    SchurForm out{input, Eigen::MatrixXcd::Identity(n, n), 0};
    auto& a = out.t;
    auto& z = out.z;
    if (n == 0) {
        return out;
    }
    reduce_to_hessenberg(a, z);

    const double anorm = a.norm();
    const long budget = static_cast<long>(opts.sweeps_per_dim) * n;
    Eigen::Index hi = n - 1;
    int stalled = 0;
    while (hi > 0) {
        // Find the start of the unreduced block ending at hi.
        Eigen::Index lo = hi;
        while (lo > 0) {
            const double sub = std::abs(a(lo, lo - 1));
            const double local = std::abs(a(lo, lo)) + std::abs(a(lo - 1, lo - 1));
            if (sub <= opts.tol * local || sub <= kEps * anorm) {
                a(lo, lo - 1) = 0.0;
                break;
            }
            --lo;
        }
        if (lo == hi) {
            --hi;
            stalled = 0;
            continue;
        }

        if (++out.sweeps > budget) {
            throw NumericalError("QR iteration did not converge within " + std::to_string(budget) +
                                 " sweeps (N = " + std::to_string(n) + ")");
        }
        ++stalled;
        Complex mu = wilkinson_shift(a, hi);
        if (stalled % 10 == 0) {
            mu = a(hi, hi) + 0.75 * std::abs(a(hi, hi - 1));
        }

        Complex x = a(lo, lo) - mu;
        Complex y = a(lo + 1, lo);
        for (Eigen::Index k = lo; k < hi; ++k) {
            if (k > lo) {
                x = a(k, k - 1);
                y = a(k + 1, k - 1);
            }
            const Givens g = Givens::zeroing(x, y);
            g.apply_left(a, k, k + 1, k > lo ? k - 1 : lo, n);
            if (k > lo) {
                a(k + 1, k - 1) = 0.0;
            }
            g.apply_right(a, k, k + 1, 0, std::min(k + 3, hi + 1));
            g.apply_right(z, k, k + 1, 0, n);
        }
    }
    // Entries below the diagonal are rounding residue after deflation.
    a.triangularView<Eigen::StrictlyLower>().setZero();
    return out;
}

Eigen::MatrixXcd triangular_eigenvectors(const Eigen::MatrixXcd& t) {
    constexpr double big = 1e100;
    const Eigen::Index n = t.rows();
    const double tnorm = t.norm();
    const double negligible = static_cast<double>(n) * kEps * tnorm;
    Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(n, n);

    for (Eigen::Index k = 0; k < n; ++k) {
        const Complex lambda = t(k, k);
        const double smin = std::max({kEps * std::abs(lambda), kEps * tnorm, std::numeric_limits<double>::min()});
        auto col = x.col(k);
        col(k) = 1.0;
        for (Eigen::Index i = k - 1; i >= 0; --i) {
            Complex acc = 0.0;
            for (Eigen::Index j = i + 1; j <= k; ++j) {
                const Complex tij = t(i, j);
                if (std::abs(tij) > negligible) {
                    acc -= tij * col(j);
                }
            }
            Complex d = t(i, i) - lambda;
            if (std::abs(d) < smin) {
                d = smin;
            }
            col(i) = acc / d;
            if (std::abs(col(i)) > big) {
                col.head(k + 1) /= col.head(k + 1).cwiseAbs().maxCoeff();
            }
        }
    }
    return x;
}

Spectrum eig(const Eigen::MatrixXcd& a, const EigOptions& opts) {
    const Eigen::Index n = a.rows();
    const BalancedMatrix bal = balance(a);
    const SchurForm schur = complex_schur(bal.matrix, opts);

    Eigen::VectorXcd values = schur.t.diagonal();
    Eigen::MatrixXcd vectors = schur.z * triangular_eigenvectors(schur.t);
    for (Eigen::Index j = 0; j < n; ++j) {
        vectors.col(j) = bal.scale.asDiagonal() * vectors.col(j);
        const double nrm = vectors.col(j).norm();
        if (nrm > 0.0 && std::isfinite(nrm)) {
            vectors.col(j) /= nrm;
        }
    }

    const double anorm = a.norm();
    const double bound = residual_bound(a);
    Eigen::VectorXd residuals(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        residuals(j) = (a * vectors.col(j) - values(j) * vectors.col(j)).norm();
        if (!(residuals(j) <= bound)) {
            Eigen::VectorXcd alt = inverse_iteration(a, values(j), j, anorm);
            const double r = (a * alt - values(j) * alt).norm();
            if (r < residuals(j) || !std::isfinite(residuals(j))) {
                vectors.col(j) = alt;
                residuals(j) = r;
            }
        }
        fix_phase(vectors.col(j));
    }
    return sort_states(std::move(values), std::move(vectors), std::move(residuals));
}

Spectrum eig(const Hamiltonian& h, const EigOptions& opts) {
    return eig(h.matrix, opts);
}

Spectrum sort_states(Eigen::VectorXcd eigenvalues, Eigen::MatrixXcd eigenvectors, Eigen::VectorXd residuals) {
    const Eigen::Index n = eigenvalues.size();
    if (eigenvectors.cols() != n || residuals.size() != n) {
        throw InvalidArgument("sort_states: eigenpair count mismatch");
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    const auto by_real = [&](Eigen::Index l, Eigen::Index r) {
        const Complex a = eigenvalues(l);
        const Complex b = eigenvalues(r);
        if (a.real() != b.real()) return a.real() < b.real();
        if (a.imag() != b.imag()) return a.imag() < b.imag();
        return l < r;
    };
    std::sort(order.begin(), order.end(), by_real);

    // Runs of numerically equal real parts are reordered by imaginary part.
    const double scale = n > 0 ? std::max(1.0, eigenvalues.cwiseAbs().maxCoeff()) : 1.0;
    const double tie = 1e-10 * scale;
    for (std::size_t start = 0; start < order.size();) {
        std::size_t end = start + 1;
        while (end < order.size() &&
               eigenvalues(order[end]).real() - eigenvalues(order[end - 1]).real() <= tie) {
            ++end;
        }
        std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end), [&](Eigen::Index l, Eigen::Index r) {
                             return eigenvalues(l).imag() < eigenvalues(r).imag();
                         });
        start = end;
    }

    Spectrum s;
    s.eigenvalues.resize(n);
    s.eigenvectors.resize(eigenvectors.rows(), n);
    s.residuals.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::Index src = order[static_cast<std::size_t>(j)];
        s.eigenvalues(j) = eigenvalues(src);
        s.eigenvectors.col(j) = eigenvectors.col(src);
        s.residuals(j) = residuals(src);
    }
    return s;
}

Eigen::VectorXd residual_check(const Eigen::MatrixXcd& h, const Spectrum& s) {
    if (h.rows() != s.eigenvectors.rows() || h.cols() != h.rows()) {
        throw InvalidArgument("residual_check: dimension mismatch");
    }
    Eigen::VectorXd r(s.dim());
    for (Eigen::Index j = 0; j < s.dim(); ++j) {
        r(j) = (h * s.state(j) - s.eigenvalues(j) * s.state(j)).norm();
    }
    return r;
}

Eigen::VectorXd residual_check(const Hamiltonian& h, const Spectrum& s) {
    return residual_check(h.matrix, s);
}

double residual_bound(const Eigen::MatrixXcd& h) {
    return 1e-8 * std::max(1.0, h.norm());
}

} // namespace epcluster
