#pragma once

#include <Eigen/Core>
#include <complex>
#include <type_traits>

namespace spinid {

using Complex = std::complex<double>;

template <class T>
struct is_complex : std::false_type {};
template <class T>
struct is_complex<std::complex<T>> : std::true_type {};
template <class T>
inline constexpr bool is_complex_v = is_complex<T>::value;

// Real part for guards and comparisons. Model code branches only on this,
// never on the imaginary perturbation carried by a complex step.
inline double real_part(double x) { return x; }
inline double real_part(const Complex& z) { return z.real(); }

template <class S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using Vec4 = Eigen::Matrix<S, 4, 1>;

using Eigen::Index;

}  // namespace spinid
