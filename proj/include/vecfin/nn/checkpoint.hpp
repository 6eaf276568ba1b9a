#pragma once

#include <iosfwd>

#include "vecfin/nn/mlp.hpp"

namespace vecfin::nn {

/// Binary network block (layout in docs/FORMATS.md). Doubles are written
/// verbatim, so a read after write is bit-exact.
void write_mlp(std::ostream& out, const Mlp& net);
Mlp read_mlp(std::istream& in);

}  // namespace vecfin::nn
