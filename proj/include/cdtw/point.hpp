#pragma once

#include <cmath>
#include <stdexcept>

namespace cdtw {

struct Point2 {
    double x{0.0};
    double y{0.0};

    friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
    friend Point2 operator*(Point2 p, double s) { return {s * p.x, s * p.y}; }
    friend Point2 operator-(Point2 p) { return {-p.x, -p.y}; }
    friend bool operator==(Point2 a, Point2 b) { return a.x == b.x && a.y == b.y; }
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }

inline bool finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

inline void require_finite(Point2 p, const char* what) {
    if (!finite(p)) throw std::invalid_argument(std::string(what) + ": coordinates must be finite");
}

}  // namespace cdtw
