#pragma once

#include <iosfwd>
#include <string>

#include "lpm/types.hpp"

namespace lpm {

/// Parameter file format, version 1.
///
/// Little-endian binary, self-describing: magic "LPMP", u32 version, u64 f0,
/// u64 task count, then mu / sigma / b / w followed by one (d_m, F_m, d_m
/// translation) block per task. Matrices are stored column-major; every
/// dimension is written explicitly. The round trip load(save(p)) reproduces
/// p bit-exactly.
void save_params(const LpmParams& params, std::ostream& out);
LpmParams load_params(std::istream& in);

void save_params_file(const LpmParams& params, const std::string& path);
LpmParams load_params_file(const std::string& path);

}  // namespace lpm
