// Four-lane terminal sampler. Each lane runs one path's counter-based
// streams, so results are bit-identical to the scalar engine and
// independent of how paths are grouped into batches.

#include <cmath>
#include <stdexcept>

#include "aniso/simulate.hpp"

#if defined(__AVX512DQ__) && defined(__AVX512VL__) && defined(__AVX2__)
#define ANISO_HAVE_BATCH4 1
#include <immintrin.h>
#else
#define ANISO_HAVE_BATCH4 0
#endif

#if defined(__AVX512F__) && defined(__AVX512DQ__)
#define ANISO_HAVE_BATCH8 1
#else
#define ANISO_HAVE_BATCH8 0
#endif

namespace aniso {

bool terminal_batch_supported(const SimConfig& config) {
#if ANISO_HAVE_BATCH4
  const auto kind = config.kernel.multiplier.kind();
  return config.dim() <= 2 && (kind == Multiplier::Kind::kConstant ||
                               kind == Multiplier::Kind::kCheckerboard);
#else
  (void)config;
  return false;
#endif
}

int terminal_batch_width(const SimConfig& config) {
  if (!terminal_batch_supported(config)) return 0;
#if ANISO_HAVE_BATCH8
  return 8;
#else
  return 4;
#endif
}

#if ANISO_HAVE_BATCH4

namespace {

inline __m256i mix64x4(__m256i z) {
  z = _mm256_xor_si256(z, _mm256_srli_epi64(z, 30));
  z = _mm256_mullo_epi64(z, _mm256_set1_epi64x(0xBF58476D1CE4E5B9ull));
  z = _mm256_xor_si256(z, _mm256_srli_epi64(z, 27));
  z = _mm256_mullo_epi64(z, _mm256_set1_epi64x(0x94D049BB133111EBull));
  return _mm256_xor_si256(z, _mm256_srli_epi64(z, 31));
}

// (double(u >> 11) + 0.5) * 2^-53, matching rng::Stream::next_unit.
inline __m256d unit_from_u64(__m256i u) {
  const __m256d b = _mm256_cvtepu64_pd(_mm256_srli_epi64(u, 11));
  return _mm256_mul_pd(_mm256_add_pd(b, _mm256_set1_pd(0.5)),
                       _mm256_set1_pd(0x1p-53));
}

inline __m256i stream_keys4(std::uint64_t seed, std::uint64_t base,
                            std::uint64_t channel) {
  alignas(32) std::uint64_t k[4];
  for (int l = 0; l < 4; ++l) k[l] = rng::stream_key(seed, base + l, channel);
  return _mm256_load_si256(reinterpret_cast<const __m256i*>(k));
}

}  // namespace

void sample_terminal_batch4(const SimConfig& config, const TailSampler& tail,
                            bool thinned, std::uint64_t path_base,
                            std::span<const double> start, double* out) {
  if (!terminal_batch_supported(config))
    throw std::logic_error("sample_terminal_batch4: unsupported configuration");
  const int d = config.dim();
  const Multiplier& m = config.kernel.multiplier;
  const bool checker = m.kind() == Multiplier::Kind::kCheckerboard;
  const double lambda = thinned ? config.kernel.lambda_bound : 1.0;
  const double inv_lambda = 1.0 / lambda;
  const double mean = 2.0 * d * lambda * tail.mass() * config.horizon;

  alignas(32) std::int64_t counts[4];
  std::uint64_t max_count = 0;
  for (int l = 0; l < 4; ++l) {
    rng::Stream times(config.base_seed, path_base + l, rng::kTimes);
    const std::uint64_t c = times.next_poisson(mean);
    counts[l] = static_cast<std::int64_t>(c);
    max_count = std::max(max_count, c);
  }
  const __m256i countv =
      _mm256_load_si256(reinterpret_cast<const __m256i*>(counts));

  __m256i s_ax = stream_keys4(config.base_seed, path_base, rng::kAxes);
  __m256i s_mag = stream_keys4(config.base_seed, path_base, rng::kMagnitudes);
  __m256i s_sgn = stream_keys4(config.base_seed, path_base, rng::kSigns);
  __m256i s_thn = stream_keys4(config.base_seed, path_base, rng::kThinning);
  const __m256i golden = _mm256_set1_epi64x(
      static_cast<long long>(rng::kGolden));

  const double x0 = start.empty() ? 0.0 : start[0];
  const double x1 = (start.empty() || d < 2) ? 0.0 : start[1];
  __m256d pos0 = _mm256_set1_pd(x0);
  __m256d pos1 = _mm256_set1_pd(x1);

  const double inv_p = checker ? m.inv_period() : 0.0;
  const __m256d inv_pv = _mm256_set1_pd(inv_p);
  const __m256d lam_lo = _mm256_set1_pd(m.min_value());
  const __m256d lam_hi = _mm256_set1_pd(m.max_value());
  __m256i cell0 = _mm256_setzero_si256(), cell1 = _mm256_setzero_si256();
  if (checker) {
    cell0 = _mm256_cvttpd_epi64(
        _mm256_floor_pd(_mm256_mul_pd(pos0, inv_pv)));
    cell1 = (d == 2) ? _mm256_cvttpd_epi64(
                           _mm256_floor_pd(_mm256_mul_pd(pos1, inv_pv)))
                     : _mm256_setzero_si256();
  }

  const double* body = tail.body_data();
  const __m256d cellsv = _mm256_set1_pd(4096.0);
  const __m256i body_min = _mm256_set1_epi64x(32);
  const __m256i sign_bit = _mm256_set1_epi64x(
      static_cast<long long>(0x8000000000000000ull));

  for (std::uint64_t k = 0; k < max_count; ++k) {
    const __m256i active =
        _mm256_cmpgt_epi64(countv, _mm256_set1_epi64x(
                                       static_cast<long long>(k)));
    const __m256i step = _mm256_and_si256(golden, active);
    s_ax = _mm256_add_epi64(s_ax, step);
    s_mag = _mm256_add_epi64(s_mag, step);
    s_sgn = _mm256_add_epi64(s_sgn, step);
    const __m256i u_ax = mix64x4(s_ax);
    const __m256i u_mag = mix64x4(s_mag);
    const __m256i u_sgn = mix64x4(s_sgn);

    // axis: ((u128)u * d) >> 64 is the top bit for d = 2, zero for d = 1.
    const __m256i axis1 =
        (d == 2) ? _mm256_cmpeq_epi64(_mm256_srli_epi64(u_ax, 63),
                                      _mm256_set1_epi64x(1))
                 : _mm256_setzero_si256();

    // Magnitude via the body table; rare big jumps patched per lane.
    const __m256d v = unit_from_u64(u_mag);
    const __m256d scaled = _mm256_mul_pd(v, cellsv);
    const __m256i idx = _mm256_cvttpd_epi64(scaled);
    const __m256d w = _mm256_sub_pd(scaled, _mm256_cvtepi64_pd(idx));
    const __m256d b0 = _mm256_i64gather_pd(body, idx, 8);
    const __m256d b1 = _mm256_i64gather_pd(
        body, _mm256_add_epi64(idx, _mm256_set1_epi64x(1)), 8);
    __m256d mag =
        _mm256_add_pd(b0, _mm256_mul_pd(w, _mm256_sub_pd(b1, b0)));
    const __m256i small_idx = _mm256_cmpgt_epi64(body_min, idx);
    if (_mm256_movemask_pd(_mm256_castsi256_pd(small_idx)) != 0) {
      alignas(32) double vv[4], mm[4];
      _mm256_store_pd(vv, v);
      _mm256_store_pd(mm, mag);
      const int mask = _mm256_movemask_pd(_mm256_castsi256_pd(small_idx));
      for (int l = 0; l < 4; ++l)
        if (mask & (1 << l)) mm[l] = tail.quantile(vv[l]);
      mag = _mm256_load_pd(mm);
    }
    const __m256d jump = _mm256_xor_pd(
        mag, _mm256_castsi256_pd(_mm256_and_si256(u_sgn, sign_bit)));

    __m256d accept = _mm256_castsi256_pd(active);
    if (thinned) {
      s_thn = _mm256_add_epi64(s_thn, step);
      const __m256d u = unit_from_u64(mix64x4(s_thn));
      __m256d lam = lam_hi;  // constant multiplier: min == max
      if (checker) {
        const __m256d pos_axis =
            _mm256_blendv_pd(pos0, pos1, _mm256_castsi256_pd(axis1));
        const __m256d mid = _mm256_add_pd(
            pos_axis, _mm256_mul_pd(_mm256_set1_pd(0.5), jump));
        const __m256i cmid = _mm256_cvttpd_epi64(
            _mm256_floor_pd(_mm256_mul_pd(mid, inv_pv)));
        const __m256i cell_other =
            _mm256_blendv_epi8(cell1, cell0, axis1);
        const __m256i parity = _mm256_and_si256(
            _mm256_add_epi64(cmid, cell_other), _mm256_set1_epi64x(1));
        const __m256i odd = _mm256_cmpeq_epi64(parity, _mm256_set1_epi64x(1));
        lam = _mm256_blendv_pd(lam_lo, lam_hi, _mm256_castsi256_pd(odd));
      }
      const __m256d p = _mm256_mul_pd(lam, _mm256_set1_pd(inv_lambda));
      const __m256d ok = _mm256_cmp_pd(u, p, _CMP_LE_OQ);
      accept = _mm256_and_pd(accept, ok);
    }

    const __m256d delta = _mm256_and_pd(jump, accept);
    const __m256d is1 = _mm256_castsi256_pd(axis1);
    pos0 = _mm256_add_pd(pos0, _mm256_andnot_pd(is1, delta));
    pos1 = _mm256_add_pd(pos1, _mm256_and_pd(is1, delta));
    if (checker) {
      // Only the jumped axis's cell can change.
      const __m256d moved = _mm256_blendv_pd(pos0, pos1, is1);
      const __m256i cnew = _mm256_cvttpd_epi64(
          _mm256_floor_pd(_mm256_mul_pd(moved, inv_pv)));
      cell0 = _mm256_blendv_epi8(cnew, cell0, axis1);
      cell1 = _mm256_blendv_epi8(cell1, cnew, axis1);
    }
  }

  alignas(32) double p0[4], p1[4];
  _mm256_store_pd(p0, pos0);
  _mm256_store_pd(p1, pos1);
  for (int l = 0; l < 4; ++l) {
    double* row = out + static_cast<std::size_t>(l) * d;
    row[0] = p0[l];
    if (d == 2) row[1] = p1[l];
    if (config.small_jump_mode == SmallJumpMode::kGaussian) {
      rng::Stream gauss(config.base_seed, path_base + l, rng::kGaussian);
      const double sd = std::sqrt(tail.sigma2() * config.horizon);
      for (int i = 0; i < d; ++i) row[i] += sd * gauss.next_normal();
    }
  }
}

#else

void sample_terminal_batch4(const SimConfig&, const TailSampler&, bool,
                            std::uint64_t, std::span<const double>, double*) {
  throw std::logic_error("sample_terminal_batch4: not built on this target");
}

#endif

#if ANISO_HAVE_BATCH8

namespace {

inline __m512i mix64x8(__m512i z) {
  z = _mm512_xor_si512(z, _mm512_srli_epi64(z, 30));
  z = _mm512_mullo_epi64(z, _mm512_set1_epi64(0xBF58476D1CE4E5B9ull));
  z = _mm512_xor_si512(z, _mm512_srli_epi64(z, 27));
  z = _mm512_mullo_epi64(z, _mm512_set1_epi64(0x94D049BB133111EBull));
  return _mm512_xor_si512(z, _mm512_srli_epi64(z, 31));
}

inline __m512d unit_from_u64x8(__m512i u) {
  const __m512d b = _mm512_cvtepu64_pd(_mm512_srli_epi64(u, 11));
  return _mm512_mul_pd(_mm512_add_pd(b, _mm512_set1_pd(0.5)),
                       _mm512_set1_pd(0x1p-53));
}

inline __m512i stream_keys8(std::uint64_t seed, std::uint64_t base,
                            std::uint64_t channel) {
  alignas(64) std::uint64_t k[8];
  for (int l = 0; l < 8; ++l) k[l] = rng::stream_key(seed, base + l, channel);
  return _mm512_load_si512(reinterpret_cast<const void*>(k));
}

}  // namespace

void sample_terminal_batch8(const SimConfig& config, const TailSampler& tail,
                            bool thinned, std::uint64_t path_base,
                            std::span<const double> start, double* out) {
  if (!terminal_batch_supported(config))
    throw std::logic_error("sample_terminal_batch8: unsupported configuration");
  const int d = config.dim();
  const Multiplier& m = config.kernel.multiplier;
  const bool checker = m.kind() == Multiplier::Kind::kCheckerboard;
  const double lambda = thinned ? config.kernel.lambda_bound : 1.0;
  const double inv_lambda = 1.0 / lambda;
  const double mean = 2.0 * d * lambda * tail.mass() * config.horizon;

  alignas(64) std::int64_t counts[8];
  std::uint64_t max_count = 0;
  for (int l = 0; l < 8; ++l) {
    rng::Stream times(config.base_seed, path_base + l, rng::kTimes);
    const std::uint64_t c = times.next_poisson(mean);
    counts[l] = static_cast<std::int64_t>(c);
    max_count = std::max(max_count, c);
  }
  const __m512i countv = _mm512_load_si512(counts);

  __m512i s_ax = stream_keys8(config.base_seed, path_base, rng::kAxes);
  __m512i s_mag = stream_keys8(config.base_seed, path_base, rng::kMagnitudes);
  __m512i s_sgn = stream_keys8(config.base_seed, path_base, rng::kSigns);
  __m512i s_thn = stream_keys8(config.base_seed, path_base, rng::kThinning);
  const __m512i golden =
      _mm512_set1_epi64(static_cast<long long>(rng::kGolden));

  const double x0 = start.empty() ? 0.0 : start[0];
  const double x1 = (start.empty() || d < 2) ? 0.0 : start[1];
  __m512d pos0 = _mm512_set1_pd(x0);
  __m512d pos1 = _mm512_set1_pd(x1);

  const double inv_p = checker ? m.inv_period() : 0.0;
  const __m512d inv_pv = _mm512_set1_pd(inv_p);
  const __m512d lam_lo = _mm512_set1_pd(m.min_value());
  const __m512d lam_hi = _mm512_set1_pd(m.max_value());
  __m512i cell0 = _mm512_setzero_si512(), cell1 = _mm512_setzero_si512();
  if (checker) {
    cell0 = _mm512_cvttpd_epi64(_mm512_floor_pd(_mm512_mul_pd(pos0, inv_pv)));
    if (d == 2)
      cell1 =
          _mm512_cvttpd_epi64(_mm512_floor_pd(_mm512_mul_pd(pos1, inv_pv)));
  }

  const double* body = tail.body_data();
  const __m512d cellsv = _mm512_set1_pd(4096.0);
  const __m512i body_min = _mm512_set1_epi64(32);
  const __m512i sign_bit =
      _mm512_set1_epi64(static_cast<long long>(0x8000000000000000ull));
  const __m512i one64 = _mm512_set1_epi64(1);

  for (std::uint64_t k = 0; k < max_count; ++k) {
    const __mmask8 active = _mm512_cmpgt_epi64_mask(
        countv, _mm512_set1_epi64(static_cast<long long>(k)));
    s_ax = _mm512_mask_add_epi64(s_ax, active, s_ax, golden);
    s_mag = _mm512_mask_add_epi64(s_mag, active, s_mag, golden);
    s_sgn = _mm512_mask_add_epi64(s_sgn, active, s_sgn, golden);
    const __m512i u_ax = mix64x8(s_ax);
    const __m512i u_mag = mix64x8(s_mag);
    const __m512i u_sgn = mix64x8(s_sgn);

    const __mmask8 axis1 =
        (d == 2) ? _mm512_cmpeq_epi64_mask(_mm512_srli_epi64(u_ax, 63), one64)
                 : __mmask8(0);

    const __m512d v = unit_from_u64x8(u_mag);
    const __m512d scaled = _mm512_mul_pd(v, cellsv);
    const __m512i idx = _mm512_cvttpd_epi64(scaled);
    const __m512d w = _mm512_sub_pd(scaled, _mm512_cvtepi64_pd(idx));
    const __m512d b0 = _mm512_i64gather_pd(idx, body, 8);
    const __m512d b1 =
        _mm512_i64gather_pd(_mm512_add_epi64(idx, one64), body, 8);
    __m512d mag = _mm512_add_pd(b0, _mm512_mul_pd(w, _mm512_sub_pd(b1, b0)));
    const __mmask8 small_idx = _mm512_cmpgt_epi64_mask(body_min, idx);
    if (small_idx != 0) {
      alignas(64) double vv[8], mm[8];
      _mm512_store_pd(vv, v);
      _mm512_store_pd(mm, mag);
      for (int l = 0; l < 8; ++l)
        if (small_idx & (1 << l)) mm[l] = tail.quantile(vv[l]);
      mag = _mm512_load_pd(mm);
    }
    const __m512d jump = _mm512_castsi512_pd(_mm512_xor_si512(
        _mm512_castpd_si512(mag), _mm512_and_si512(u_sgn, sign_bit)));

    __mmask8 accept = active;
    if (thinned) {
      s_thn = _mm512_mask_add_epi64(s_thn, active, s_thn, golden);
      const __m512d u = unit_from_u64x8(mix64x8(s_thn));
      __m512d lam = lam_hi;  // constant multiplier: min == max
      if (checker) {
        const __m512d pos_axis = _mm512_mask_blend_pd(axis1, pos0, pos1);
        const __m512d mid =
            _mm512_add_pd(pos_axis, _mm512_mul_pd(_mm512_set1_pd(0.5), jump));
        const __m512i cmid =
            _mm512_cvttpd_epi64(_mm512_floor_pd(_mm512_mul_pd(mid, inv_pv)));
        const __m512i cell_other = _mm512_mask_blend_epi64(axis1, cell1, cell0);
        const __m512i parity =
            _mm512_and_si512(_mm512_add_epi64(cmid, cell_other), one64);
        const __mmask8 odd = _mm512_cmpeq_epi64_mask(parity, one64);
        lam = _mm512_mask_blend_pd(odd, lam_lo, lam_hi);
      }
      const __m512d p = _mm512_mul_pd(lam, _mm512_set1_pd(inv_lambda));
      accept = _kand_mask8(accept, _mm512_cmp_pd_mask(u, p, _CMP_LE_OQ));
    }

    const __m512d delta = _mm512_maskz_mov_pd(accept, jump);
    pos0 = _mm512_mask_add_pd(pos0, _knot_mask8(axis1), pos0, delta);
    pos1 = _mm512_mask_add_pd(pos1, axis1, pos1, delta);
    if (checker) {
      const __m512d moved = _mm512_mask_blend_pd(axis1, pos0, pos1);
      const __m512i cnew =
          _mm512_cvttpd_epi64(_mm512_floor_pd(_mm512_mul_pd(moved, inv_pv)));
      cell0 = _mm512_mask_blend_epi64(axis1, cnew, cell0);
      cell1 = _mm512_mask_blend_epi64(axis1, cell1, cnew);
    }
  }

  alignas(64) double p0[8], p1[8];
  _mm512_store_pd(p0, pos0);
  _mm512_store_pd(p1, pos1);
  for (int l = 0; l < 8; ++l) {
    double* row = out + static_cast<std::size_t>(l) * d;
    row[0] = p0[l];
    if (d == 2) row[1] = p1[l];
    if (config.small_jump_mode == SmallJumpMode::kGaussian) {
      rng::Stream gauss(config.base_seed, path_base + l, rng::kGaussian);
      const double sd = std::sqrt(tail.sigma2() * config.horizon);
      for (int i = 0; i < d; ++i) row[i] += sd * gauss.next_normal();
    }
  }
}

#else

void sample_terminal_batch8(const SimConfig&, const TailSampler&, bool,
                            std::uint64_t, std::span<const double>, double*) {
  throw std::logic_error("sample_terminal_batch8: not built on this target");
}

#endif

}  // namespace aniso
