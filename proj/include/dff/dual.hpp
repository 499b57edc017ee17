// Forward-mode scalar dual numbers plus the minimal 3-vector / 3x3-matrix
// templates the kinematic chain needs. One derivative slot per Dual; the
// caller runs one pass per parameter.

#pragma once

#include <array>
#include <cmath>

namespace dff {

struct Dual {
    double v = 0.0;  // value
    double d = 0.0;  // derivative w.r.t. the active parameter

    Dual() = default;
    Dual(double value) : v(value) {}
    Dual(double value, double deriv) : v(value), d(deriv) {}
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator-(Dual a) { return {-a.v, -a.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator/(Dual a, Dual b) {
    return {a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v)};
}
inline Dual& operator+=(Dual& a, Dual b) { a = a + b; return a; }
inline Dual& operator-=(Dual& a, Dual b) { a = a - b; return a; }
inline Dual& operator*=(Dual& a, Dual b) { a = a * b; return a; }

inline Dual sin(Dual a) { return {std::sin(a.v), std::cos(a.v) * a.d}; }
inline Dual cos(Dual a) { return {std::cos(a.v), -std::sin(a.v) * a.d}; }
inline Dual sqrt(Dual a) {
    double s = std::sqrt(a.v);
    return {s, s > 0.0 ? a.d / (2.0 * s) : 0.0};
}
inline double value(Dual a) { return a.v; }
inline double value(double a) { return a; }

template <typename S>
struct Vec3T {
    S x{}, y{}, z{};

    Vec3T operator+(const Vec3T& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3T operator-(const Vec3T& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3T operator*(S s) const { return {x * s, y * s, z * s}; }
    S dot(const Vec3T& o) const { return x * o.x + y * o.y + z * o.z; }
    S squaredNorm() const { return dot(*this); }
};

template <typename S>
struct Mat3T {
    // row-major
    std::array<S, 9> m{};

    static Mat3T identity() {
        Mat3T r;
        r.m = {S(1), S(0), S(0), S(0), S(1), S(0), S(0), S(0), S(1)};
        return r;
    }
    Vec3T<S> operator*(const Vec3T<S>& v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
                m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }
    Mat3T operator*(const Mat3T& o) const {
        Mat3T r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                S acc = S(0);
                for (int k = 0; k < 3; ++k) acc += m[i * 3 + k] * o.m[k * 3 + j];
                r.m[i * 3 + j] = acc;
            }
        return r;
    }
};

// Rodrigues exponential map. The Taylor branch keeps derivatives exact at
// the rest pose where the rotation vector is identically zero.
template <typename S>
Mat3T<S> axis_angle_to_matrix(const Vec3T<S>& w) {
    using std::cos;
    using std::sin;
    using std::sqrt;
    S t2 = w.squaredNorm();
    S a, b;  // a = sin(t)/t, b = (1 - cos(t))/t^2
    if (value(t2) < 1e-12) {
        a = S(1) - t2 * S(1.0 / 6.0) + t2 * t2 * S(1.0 / 120.0);
        b = S(0.5) - t2 * S(1.0 / 24.0) + t2 * t2 * S(1.0 / 720.0);
    } else {
        S t = sqrt(t2);
        a = sin(t) / t;
        b = (S(1) - cos(t)) / t2;
    }
    Mat3T<S> r;
    r.m[0] = S(1) + b * (-w.z * w.z - w.y * w.y);
    r.m[1] = b * w.x * w.y - a * w.z;
    r.m[2] = b * w.x * w.z + a * w.y;
    r.m[3] = b * w.x * w.y + a * w.z;
    r.m[4] = S(1) + b * (-w.z * w.z - w.x * w.x);
    r.m[5] = b * w.y * w.z - a * w.x;
    r.m[6] = b * w.x * w.z - a * w.y;
    r.m[7] = b * w.y * w.z + a * w.x;
    r.m[8] = S(1) + b * (-w.y * w.y - w.x * w.x);
    return r;
}

}  // namespace dff
