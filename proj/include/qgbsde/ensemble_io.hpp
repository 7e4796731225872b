#pragma once

#include <filesystem>

#include "qgbsde/sde_engine.hpp"

namespace qgbsde {

/// Binary ensemble dump.
///
///   bytes 0..3   magic "QGB1"
///   then five little-endian uint64: m, d, N, P, seed
///   then little-endian float64 increments, row-major [path][step][component] (P*N*d)
///   then little-endian float64 states, row-major [path][node][component] (P*(N+1)*m)
///
/// Flows are not stored; they are recomputed from the increments on load.
void write_ensemble(const std::filesystem::path& file, const PathEnsemble& ensemble);

/// Reads a dump written by write_ensemble. The time grid is not part of the
/// format, so the caller supplies it; N must match. Throws EnsembleFormatError.
PathEnsemble read_ensemble(const std::filesystem::path& file, const Partition& partition);

}  // namespace qgbsde
