#include "rkth/rk_core.hpp"

#include <algorithm>
#include <cmath>

namespace rkth {

double cubic_bspline(double s) {
    if (s < 0.0) throw std::invalid_argument("kernel argument must be nonnegative");
    if (s >= 1.0) return 0.0;
    if (s <= 0.5) return 2.0 / 3.0 - 4.0 * s * s + 4.0 * s * s * s;
    const double t = 1.0 - s;
    return 4.0 / 3.0 * t * t * t;
}

double cubic_bspline_deriv(double s) {
    if (s < 0.0) throw std::invalid_argument("kernel argument must be nonnegative");
    if (s >= 1.0) return 0.0;
    if (s <= 0.5) return -8.0 * s + 12.0 * s * s;
    const double t = 1.0 - s;
    return -4.0 * t * t;
}

double cubic_bspline_dratio(double s) {
    if (s < 0.0) throw std::invalid_argument("kernel argument must be nonnegative");
    if (s >= 1.0) return 0.0;
    if (s <= 0.5) return -8.0 + 12.0 * s;
    return cubic_bspline_deriv(s) / s;
}

void NodeCloud::validate() const {
    if (x.size() != support.size() || (!singular.empty() && singular.size() != x.size()))
        throw std::invalid_argument("node cloud arrays have inconsistent lengths");
    for (size_t i = 0; i < x.size(); ++i) {
        if (!(x[i][0] > 0.0))
            throw std::invalid_argument("node radius must be positive (node " + std::to_string(i) + ")");
        if (!(support[i] > 0.0))
            throw std::invalid_argument("node support must be positive (node " + std::to_string(i) + ")");
    }
}

void NodeCloud::build_index() {
    indexed_ = false;
    if (x.empty()) return;
    double rmin = x[0][0], rmax = x[0][0], zmin = x[0][1], zmax = x[0][1], amax = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        rmin = std::min(rmin, x[i][0]);
        rmax = std::max(rmax, x[i][0]);
        zmin = std::min(zmin, x[i][1]);
        zmax = std::max(zmax, x[i][1]);
        amax = std::max(amax, support[i]);
    }
    bin_size_ = amax;
    r0_ = rmin;
    z0_ = zmin;
    nbr_ = std::max(1, static_cast<int>((rmax - rmin) / bin_size_) + 1);
    nbz_ = std::max(1, static_cast<int>((zmax - zmin) / bin_size_) + 1);
    bins_.assign(static_cast<size_t>(nbr_) * nbz_, {});
    for (size_t i = 0; i < x.size(); ++i) {
        int br = std::clamp(static_cast<int>((x[i][0] - r0_) / bin_size_), 0, nbr_ - 1);
        int bz = std::clamp(static_cast<int>((x[i][1] - z0_) / bin_size_), 0, nbz_ - 1);
        bins_[static_cast<size_t>(bz) * nbr_ + br].push_back(static_cast<int>(i));
    }
    indexed_ = true;
}

std::vector<int> NodeCloud::covering_nodes(const Vec2& p) const {
    std::vector<int> out;
    auto test = [&](int i) {
        const double d = (p - x[i]).norm();
        if (d < support[i]) out.push_back(i);
    };
    if (!indexed_) {
        for (int i = 0; i < size(); ++i) test(i);
        return out;
    }
    const int br0 = static_cast<int>((p[0] - r0_) / bin_size_);
    const int bz0 = static_cast<int>((p[1] - z0_) / bin_size_);
    for (int bz = std::max(0, bz0 - 1); bz <= std::min(nbz_ - 1, bz0 + 1); ++bz)
        for (int br = std::max(0, br0 - 1); br <= std::min(nbr_ - 1, br0 + 1); ++br)
            for (int i : bins_[static_cast<size_t>(bz) * nbr_ + br]) test(i);
    std::sort(out.begin(), out.end());
    return out;
}

Eigen::VectorXd build_basis(double dr, double dz, double r, double r_I, const BasisSpec& spec) {
    if (spec.order != 1) throw std::invalid_argument("only basis order 1 is supported");
    const bool enr = spec.enriched_at(r);
    Eigen::VectorXd h(enr ? 4 : 3);
    h[0] = 1.0;
    h[1] = dr;
    h[2] = dz;
    if (enr) {
        if (!(r > 0.0) || !(r_I > 0.0))
            throw std::invalid_argument("log enrichment requires positive radii");
        h[3] = std::log(r / r_I);
    }
    return h;
}

namespace {

constexpr double kCondLimit = 1e12;

// Kernel weight and spatial gradient for a node; handles the singular form.
struct KernelEval {
    double w;
    Vec2 dw;
};

KernelEval eval_node_kernel(const Vec2& diff, double a, bool sing, bool with_grad) {
    KernelEval out{0.0, Vec2::Zero()};
    const double d = diff.norm();
    const double s = d / a;
    if (s >= 1.0) return out;
    const double w = cubic_bspline(s);
    if (!sing) {
        out.w = w;
        if (with_grad) out.dw = (cubic_bspline_dratio(s) / (a * a)) * diff;
        return out;
    }
    // singular kernel w(s)/s^2; callers special-case points at the node center
    const double s2 = s * s;
    out.w = w / s2;
    if (with_grad) {
        const double dwds = cubic_bspline_deriv(s);
        const double fac = (dwds / (s * s2) - 2.0 * w / (s2 * s2)) / (a * a);
        out.dw = fac * diff;
    }
    return out;
}

}  // namespace

RKShapeSet shape_functions(const Vec2& pt, const NodeCloud& cloud, const BasisSpec& spec,
                           bool with_grad) {
    RKShapeSet set;
    set.point = pt;
    set.nodes = cloud.covering_nodes(pt);
    const int nn = static_cast<int>(set.nodes.size());
    const bool enr = spec.enriched_at(pt[0]);
    const int m = enr ? 4 : 3;
    if (enr && !(pt[0] > 0.0)) throw std::invalid_argument("enriched basis requires r > 0");

    // A point sitting on a singular node center gets the exact Kronecker limit.
    const bool any_singular = !cloud.singular.empty();
    if (any_singular) {
        for (int k = 0; k < nn; ++k) {
            const int i = set.nodes[k];
            if (!cloud.singular[i]) continue;
            if ((pt - cloud.x[i]).norm() < 1e-12 * cloud.support[i]) {
                set.value = Eigen::VectorXd::Zero(nn);
                set.value[k] = 1.0;
                set.grad.resize(nn, 2);
                set.has_grad = false;
                return set;
            }
        }
    }

    if (nn < m) throw SingularMomentError(std::numeric_limits<double>::infinity(), nn);

    // Column scaling keeps the moment matrix well conditioned: monomials are
    // measured in support units and the log column is lifted to O(1) far from
    // the axis where it degenerates toward the linear column.
    double abar = 0.0;
    for (int k = 0; k < nn; ++k) abar += cloud.support[set.nodes[k]];
    abar /= nn;
    Eigen::Vector4d scale(1.0, 1.0 / abar, 1.0 / abar, 1.0);
    if (enr) scale[3] = std::max(pt[0] / abar, 1.0);

    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, m);
    Eigen::MatrixXd dMr, dMz;
    Eigen::MatrixXd H(m, nn);       // scaled basis per node
    Eigen::MatrixXd dHr, dHz;       // scaled basis derivatives w.r.t. point
    Eigen::VectorXd w(nn);
    Eigen::MatrixXd dwdx;
    if (with_grad) {
        dMr = Eigen::MatrixXd::Zero(m, m);
        dMz = Eigen::MatrixXd::Zero(m, m);
        dHr.resize(m, nn);
        dHz.resize(m, nn);
        dwdx.resize(nn, 2);
    }

    for (int k = 0; k < nn; ++k) {
        const int i = set.nodes[k];
        const Vec2 diff = pt - cloud.x[i];
        Eigen::VectorXd h(m);
        h[0] = 1.0;
        h[1] = diff[0] * scale[1];
        h[2] = diff[1] * scale[2];
        if (enr) h[3] = std::log(pt[0] / cloud.x[i][0]) * scale[3];
        H.col(k) = h;

        const bool sing = any_singular && cloud.singular[i];
        const KernelEval ke = eval_node_kernel(diff, cloud.support[i], sing, with_grad);
        w[k] = ke.w;
        M.noalias() += ke.w * h * h.transpose();

        if (with_grad) {
            Eigen::VectorXd hr = Eigen::VectorXd::Zero(m), hz = Eigen::VectorXd::Zero(m);
            hr[1] = scale[1];
            hz[2] = scale[2];
            if (enr) hr[3] = scale[3] / pt[0];
            dHr.col(k) = hr;
            dHz.col(k) = hz;
            dwdx(k, 0) = ke.dw[0];
            dwdx(k, 1) = ke.dw[1];
            dMr.noalias() += ke.dw[0] * h * h.transpose() + ke.w * (hr * h.transpose() + h * hr.transpose());
            dMz.noalias() += ke.dw[1] * h * h.transpose() + ke.w * (hz * h.transpose() + h * hz.transpose());
        }
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    const double rc = lu.rcond();
    if (!lu.isInvertible() || !(rc > 1.0 / kCondLimit))
        throw SingularMomentError(lu.isInvertible() && rc > 0 ? 1.0 / rc : std::numeric_limits<double>::infinity(), nn);

    Eigen::VectorXd h0 = Eigen::VectorXd::Zero(m);
    h0[0] = 1.0;
    const Eigen::VectorXd b = lu.solve(h0);

    set.value.resize(nn);
    for (int k = 0; k < nn; ++k) set.value[k] = b.dot(H.col(k)) * w[k];

    if (with_grad) {
        const Eigen::VectorXd br = -lu.solve(dMr * b);
        const Eigen::VectorXd bz = -lu.solve(dMz * b);
        set.grad.resize(nn, 2);
        for (int k = 0; k < nn; ++k) {
            set.grad(k, 0) = br.dot(H.col(k)) * w[k] + b.dot(dHr.col(k)) * w[k] + b.dot(H.col(k)) * dwdx(k, 0);
            set.grad(k, 1) = bz.dot(H.col(k)) * w[k] + b.dot(dHz.col(k)) * w[k] + b.dot(H.col(k)) * dwdx(k, 1);
        }
        set.has_grad = true;
    }
    return set;
}

double verify_reproduction(const Vec2& pt, const NodeCloud& cloud, const BasisSpec& spec) {
    const RKShapeSet set = shape_functions(pt, cloud, spec);
    const bool enr = spec.enriched_at(pt[0]);
    const int m = enr ? 4 : 3;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(m);
    for (size_t k = 0; k < set.nodes.size(); ++k) {
        const int i = set.nodes[k];
        const Vec2 diff = pt - cloud.x[i];
        acc += set.value[static_cast<Eigen::Index>(k)] *
               build_basis(diff[0], diff[1], pt[0], cloud.x[i][0], spec);
    }
    Eigen::VectorXd target = Eigen::VectorXd::Zero(m);
    target[0] = 1.0;
    return (acc - target).cwiseAbs().maxCoeff();
}

}  // namespace rkth
