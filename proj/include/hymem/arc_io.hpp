#pragma once

// CSV serialization of hybrid arcs: a header row, then rows `t,j,v_1,...,v_n`
// sorted by (j, t). Numbers are written with 17 significant digits so that a
// write/read round trip reproduces every sample bit for bit.

#include "hymem/hybrid_time.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace hymem {

void write_arc_csv(std::ostream& os, const HybridArc& arc, const std::vector<std::string>& names = {});
std::string arc_to_csv(const HybridArc& arc, const std::vector<std::string>& names = {});

/// Parses CSV produced by write_arc_csv. Rows may come in any order; they are
/// sorted by (j, t) before the arc is assembled.
HybridArc read_arc_csv(std::istream& is);
HybridArc arc_from_csv(const std::string& text);

}  // namespace hymem
