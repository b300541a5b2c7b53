#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgd {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

  constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
  constexpr bool operator==(const Vec2&) const = default;
};

constexpr Vec2 operator*(double s, const Vec2& v) { return v * s; }
constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& v) { return std::hypot(v.x, v.y); }
inline double distance(const Vec2& a, const Vec2& b) { return norm(a - b); }

/// Signed area of the triangle (a, b, c) times two; positive for a left turn.
constexpr double orient(const Vec2& a, const Vec2& b, const Vec2& c) {
  return cross(b - a, c - a);
}

using Path = std::vector<Vec2>;

enum class ErrorKind {
  kDisconnectedFreeSpace,
  kEmptyFreeSpace,
  kNonSimplePolygon,
  kNotAdjacent,
  kNoFreeCells,
  kUnsolvable,
  kUnknownVertex,
  kUncoveredWaypoint,
  kInconsistentChain,
  kDivergedTraining,
  kLengthMismatch,
  kRepairFailed,
  kPlacementFailed,
  kDegenerateInstance,
  kTooShort,
  kBadWindow,
  kIoError,
  kInvalidInput,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

template <ErrorKind K>
class KindError : public Error {
 public:
  explicit KindError(const std::string& what) : Error(K, what) {}
};

using DisconnectedFreeSpace = KindError<ErrorKind::kDisconnectedFreeSpace>;
using EmptyFreeSpace = KindError<ErrorKind::kEmptyFreeSpace>;
using NonSimplePolygon = KindError<ErrorKind::kNonSimplePolygon>;
using NotAdjacent = KindError<ErrorKind::kNotAdjacent>;
using NoFreeCells = KindError<ErrorKind::kNoFreeCells>;
using Unsolvable = KindError<ErrorKind::kUnsolvable>;
using UnknownVertex = KindError<ErrorKind::kUnknownVertex>;
using UncoveredWaypoint = KindError<ErrorKind::kUncoveredWaypoint>;
using InconsistentChain = KindError<ErrorKind::kInconsistentChain>;
using DivergedTraining = KindError<ErrorKind::kDivergedTraining>;
using LengthMismatch = KindError<ErrorKind::kLengthMismatch>;
using RepairFailed = KindError<ErrorKind::kRepairFailed>;
using PlacementFailed = KindError<ErrorKind::kPlacementFailed>;
using DegenerateInstance = KindError<ErrorKind::kDegenerateInstance>;
using TooShort = KindError<ErrorKind::kTooShort>;
using BadWindow = KindError<ErrorKind::kBadWindow>;
using IoError = KindError<ErrorKind::kIoError>;
using InvalidInput = KindError<ErrorKind::kInvalidInput>;

}  // namespace dgd
