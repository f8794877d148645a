#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace epunmix {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using ArrayXX = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Base class of everything thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
struct InvalidArgument : Error {
  using Error::Error;
};

/// Shapes of two related objects disagree.
struct DimensionMismatch : Error {
  using Error::Error;
};

/// Gaussian division with equal precisions: the cavity is improper.
struct DegenerateCavity : Error {
  using Error::Error;
};

/// logit() of an exact 0 or 1.
struct SaturatedProbability : Error {
  using Error::Error;
};

/// Combined site precision lost positivity (unreachable under the skip policy).
struct CorruptedState : Error {
  using Error::Error;
};

/// The endmember system is rank deficient; per-pixel problems are ill posed.
struct IllPosedProblem : Error {
  using Error::Error;
};

/// Spectrum generator could not satisfy the mutual-angle constraint.
struct InfeasibleLibrary : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};
struct MalformedHeader : IoError {
  using IoError::IoError;
};
struct SizeMismatch : IoError {
  using IoError::IoError;
};
struct UnknownDtype : IoError {
  using IoError::IoError;
};

/// Runs body(begin, end) over a contiguous partition of [0, n), one block
/// per worker. threads <= 1 gives a single serial block, the determinism
/// baseline; requests beyond the hardware concurrency are clamped. Bodies
/// must write disjoint data and must not throw. Results do not depend on
/// the partition, so any thread count reproduces the serial output.
template <typename Body>
void parallel_for_blocks(Index n, int threads, Body&& body) {
  if (n <= 0) return;
  if (threads > 1) {
    const unsigned hw = std::thread::hardware_concurrency();
    if (hw > 0) threads = std::min<int>(threads, static_cast<int>(hw));
  }
  if (threads <= 1 || n == 1) {
    body(Index(0), n);
    return;
  }
  const Index workers = std::min<Index>(threads, n);
  const Index chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (Index w = 0; w < workers; ++w) {
    const Index begin = w * chunk;
    const Index end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([begin, end, &body] { body(begin, end); });
  }
  for (auto& t : pool) t.join();
}

/// Per-index convenience wrapper over parallel_for_blocks.
template <typename Body>
void parallel_for(Index n, int threads, Body&& body) {
  parallel_for_blocks(n, threads, [&body](Index begin, Index end) {
    for (Index i = begin; i < end; ++i) body(i);
  });
}

}  // namespace epunmix
