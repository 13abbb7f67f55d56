#pragma once

// Fractal sequences h for a frequency group: exp(2 pi i h(n) xi) converges
// for every xi in the group, and the limits form a character tau.
// Fractality is only ever certified over a finite tail.

#include <cstdint>
#include <optional>
#include <vector>

#include "apdet/group.hpp"

namespace apdet {

struct FractalSeq {
  std::vector<std::int64_t> values;
  Character tau;
  /// Per generator: length in turns of the shortest arc holding the tail
  /// phases h(j) xi_i mod 1 (last quarter of the list, or the extracted set).
  std::vector<double> certificate;
};

/// Denominators q_1..q_m of the continued fraction convergents of x. Stops
/// early when a convergent reproduces x to working precision.
std::vector<std::int64_t> cf_denominators(double x, int m);

/// h(j) = k0 + q_{m_j} over convergent denominators q = c (mod N) of the
/// single irrational generator. Groups without generators fall back to
/// arithmetic_fractal with step N.
FractalSeq fractal_from_cf(const FreqGroup& group, std::int64_t residue, std::int64_t k0,
                           std::size_t length);

/// h(j) = k0 + j * step on a group without irrational generators. step
/// defaults to N; step 0 gives the constant sequence.
FractalSeq arithmetic_fractal(const FreqGroup& group, std::int64_t k0, std::size_t length,
                              std::optional<std::int64_t> step = std::nullopt);

/// Constant sequence h(j) = k0, fractal for any group with tau = tau_{k0}.
FractalSeq constant_fractal(const FreqGroup& group, std::int64_t k0, std::size_t length);

/// Greedy realization of the diagonal-argument extraction: for each
/// generator keeps the largest cluster of indices whose phases fit in an arc
/// of width delta (in turns), halving delta per generator; the residue class
/// mod N is fixed first.
FractalSeq extract_fractal(const FreqGroup& group, const std::vector<std::int64_t>& candidate,
                           double delta);

struct FractalVerdict {
  bool fractal = true;
  std::vector<double> diameters;  // chord diameters, in [0, 2]
  std::vector<double> arc_widths;  // in turns
  std::vector<double> first_half;
  std::vector<double> second_half;
  Character tau;
};

/// Phase diameters over the tail (the last tail_fraction of h), with a
/// character from the normalized tail mean. Flags non-fractal when the
/// residue mod N is not constant on the tail, and when a diameter does not
/// shrink between the two halves of the tail. With a tolerance, the shrink
/// test is replaced by: every tail arc width <= tolerance.
FractalVerdict verify_fractal(const FreqGroup& group, const std::vector<std::int64_t>& h,
                              double tail_fraction, std::optional<double> tolerance = std::nullopt);

/// max over pairs |exp(2 pi i a) - exp(2 pi i b)| for the given phases (turns).
double chord_diameter(const std::vector<double>& turns);

}  // namespace apdet
