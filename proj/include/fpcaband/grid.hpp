#pragma once

// Functions on a discretized compact interval [lower, upper]. The domain
// carries p midpoint nodes t_i = lower + (i - 1/2) * (upper - lower) / p and
// the matching rectangle weight w = (upper - lower) / p. Every integral in
// this library is the quadrature w * sum_i f(t_i) on such a domain; no other
// rule is used anywhere.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <utility>

namespace fpcaband {

template <typename Scalar = double>
class GridDomain {
 public:
  GridDomain() = default;

  GridDomain(Scalar lower, Scalar upper, Eigen::Index p)
      : lower_(lower), upper_(upper), p_(p) {
    if (!std::isfinite(static_cast<double>(lower)) ||
        !std::isfinite(static_cast<double>(upper))) {
      throw std::invalid_argument("GridDomain: endpoints must be finite");
    }
    if (!(upper > lower)) {
      throw std::invalid_argument("GridDomain: upper must exceed lower");
    }
    if (p < 2) {
      throw std::invalid_argument("GridDomain: need at least 2 nodes");
    }
    weight_ = (upper - lower) / static_cast<Scalar>(p);
    nodes_.resize(p);
    for (Eigen::Index i = 0; i < p; ++i) {
      nodes_[i] = lower + (static_cast<Scalar>(i) + Scalar(0.5)) * weight_;
    }
  }

  Scalar lower() const { return lower_; }
  Scalar upper() const { return upper_; }
  Eigen::Index size() const { return p_; }
  Scalar weight() const { return weight_; }
  // Lebesgue measure of the interval.
  Scalar length() const { return upper_ - lower_; }
  const Eigen::VectorX<Scalar>& nodes() const { return nodes_; }
  Scalar node(Eigen::Index i) const { return nodes_[i]; }

  friend bool operator==(const GridDomain& a, const GridDomain& b) {
    return a.lower_ == b.lower_ && a.upper_ == b.upper_ && a.p_ == b.p_;
  }
  friend bool operator!=(const GridDomain& a, const GridDomain& b) {
    return !(a == b);
  }

 private:
  Scalar lower_{0};
  Scalar upper_{1};
  Eigen::Index p_{0};
  Scalar weight_{0};
  Eigen::VectorX<Scalar> nodes_;
};

// A function represented by its values at the domain nodes.
template <typename Scalar = double>
struct GridFunction {
  GridDomain<Scalar> domain;
  Eigen::VectorX<Scalar> values;
};

template <typename Scalar>
GridDomain<Scalar> make_domain(Scalar lower, Scalar upper, Eigen::Index p) {
  return GridDomain<Scalar>(lower, upper, p);
}

inline GridDomain<double> make_domain(double lower, double upper,
                                      Eigen::Index p) {
  return GridDomain<double>(lower, upper, p);
}

namespace detail {

template <typename Scalar>
void require_same_domain(const GridDomain<Scalar>& a,
                         const GridDomain<Scalar>& b) {
  if (a != b) {
    throw std::invalid_argument("grid functions live on different domains");
  }
}

}  // namespace detail

// Quadrature inner product of two node-value vectors on a common domain.
template <typename Scalar, typename DerivedA, typename DerivedB>
Scalar quadrature_inner(const GridDomain<Scalar>& domain,
                        const Eigen::MatrixBase<DerivedA>& a,
                        const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != domain.size() || b.size() != domain.size()) {
    throw std::invalid_argument("value vector length does not match grid");
  }
  return domain.weight() * a.dot(b);
}

template <typename Scalar, typename Derived>
Scalar quadrature_norm(const GridDomain<Scalar>& domain,
                       const Eigen::MatrixBase<Derived>& a) {
  using std::sqrt;
  return sqrt(quadrature_inner(domain, a, a));
}

template <typename Scalar>
Scalar inner_product(const GridFunction<Scalar>& f,
                     const GridFunction<Scalar>& g) {
  detail::require_same_domain(f.domain, g.domain);
  return quadrature_inner(f.domain, f.values, g.values);
}

template <typename Scalar>
Scalar norm(const GridFunction<Scalar>& f) {
  return quadrature_norm(f.domain, f.values);
}

}  // namespace fpcaband
