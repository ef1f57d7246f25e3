#pragma once

#include <filesystem>
#include <iosfwd>

#include "lbpwht/types.hpp"

namespace lbpwht {

// Binary tensor format "LBPW":
//   bytes 0..3   magic "LBPW"
//   u32 LE       version (1)
//   u32 LE       rows      (>= 1)
//   u32 LE       cols      (>= 1)
//   f32 LE       payload, row-major, rows*cols entries
//
// Values are widened to double on load; save narrows with round-to-nearest,
// so load(save(m)) is the identity for any matrix whose entries are exactly
// representable in single precision.

void save_tensor(const Matrix& m, std::ostream& out);
void save_tensor(const Matrix& m, const std::filesystem::path& path);

Matrix load_tensor(std::istream& in);
Matrix load_tensor(const std::filesystem::path& path);

}  // namespace lbpwht
