#include "vgmt/layers.hpp"

#include <cmath>

namespace vgmt {

PositionalEncodingTable positional_encoding(Index max_len, Index dim, bool one_based) {
  if (max_len < 1) throw ContractError("positional_encoding: length must be >= 1");
  if (dim < 1) throw ContractError("positional_encoding: dim must be >= 1");
  PositionalEncodingTable pe{max_len, dim, one_based, Matrix<double>(max_len, dim)};
  for (Index row = 0; row < max_len; ++row) {
    const double pos = static_cast<double>(one_based ? row + 1 : row);
    for (Index col = 0; col < dim; ++col) {
      const Index i = col / 2;
      const double angle = pos / std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(dim));
      pe.table(row, col) = (col % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

}  // namespace vgmt
