#pragma once

#include <string>

#include "nesteq/network.hpp"

namespace nesteq {

/// Parses the canonical network format (JSON with top-level keys `levels`,
/// `gamma`, `demands`). Unknown keys anywhere are rejected with a ParseError
/// naming the key. Structural validity beyond the schema is validate()'s job.
HierNetwork parse_network(const std::string& text);

/// Reads and parses a network file. ParseError on IO failure.
HierNetwork load_network(const std::string& path);

/// Canonical serialization: fixed key order, 2-space indent, every level-1
/// OD's demand listed. parse(serialize(net)) reproduces the network.
std::string serialize_network(const HierNetwork& net);

void save_network(const HierNetwork& net, const std::string& path);

} // namespace nesteq
