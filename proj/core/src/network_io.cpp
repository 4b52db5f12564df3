#include "nesteq/network_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace nesteq {

namespace {

using json = nlohmann::ordered_json;

void expect_keys(const json& obj, const std::string& where,
                 const std::set<std::string>& allowed) {
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw ParseError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

double number_at(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ParseError("missing key '" + key + "' in " + where);
  if (!obj[key].is_number()) throw ParseError("key '" + key + "' in " + where + " must be a number");
  return obj[key].get<double>();
}

std::string string_at(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ParseError("missing key '" + key + "' in " + where);
  if (!obj[key].is_string()) throw ParseError("key '" + key + "' in " + where + " must be a string");
  return obj[key].get<std::string>();
}

CostParams parse_cost(const json& obj, const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + " must be an object");
  const std::string family = string_at(obj, "family", where);
  CostParams p;
  if (family == "constant") {
    expect_keys(obj, where, {"family", "t0"});
    p = CostParams::constant(number_at(obj, "t0", where));
  } else if (family == "affine") {
    expect_keys(obj, where, {"family", "t0", "slope"});
    p = CostParams::affine(number_at(obj, "t0", where), number_at(obj, "slope", where));
  } else if (family == "bpr") {
    expect_keys(obj, where, {"family", "t0", "capacity", "alpha", "beta"});
    p = CostParams::bpr(number_at(obj, "t0", where), number_at(obj, "capacity", where),
                        number_at(obj, "alpha", where), number_at(obj, "beta", where));
  } else if (family == "capacity_limited") {
    expect_keys(obj, where, {"family", "t0", "capacity"});
    p = CostParams::capacity_limited(number_at(obj, "t0", where),
                                     number_at(obj, "capacity", where));
  } else {
    throw ParseError("unknown cost family '" + family + "' in " + where);
  }
  return p;
}

json cost_to_json(const CostParams& p) {
  json obj;
  switch (p.family) {
    case CostFamily::Constant:
      obj["family"] = "constant";
      obj["t0"] = p.t0;
      break;
    case CostFamily::Affine:
      obj["family"] = "affine";
      obj["t0"] = p.t0;
      obj["slope"] = p.slope;
      break;
    case CostFamily::Bpr:
      obj["family"] = "bpr";
      obj["t0"] = p.t0;
      obj["capacity"] = p.capacity;
      obj["alpha"] = p.alpha;
      obj["beta"] = p.beta;
      break;
    case CostFamily::CapacityLimited:
      obj["family"] = "capacity_limited";
      obj["t0"] = p.t0;
      obj["capacity"] = p.capacity;
      break;
  }
  return obj;
}

} // namespace

HierNetwork parse_network(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw ParseError("network file must hold a JSON object");
  expect_keys(root, "network", {"levels", "gamma", "demands"});
  if (!root.contains("levels") || !root["levels"].is_array() || root["levels"].empty()) {
    throw ParseError("'levels' must be a non-empty array");
  }
  if (!root.contains("gamma") || !root["gamma"].is_array()) {
    throw ParseError("'gamma' must be an array");
  }

  HierNetwork net;
  for (const auto& g : root["gamma"]) {
    if (!g.is_number()) throw ParseError("'gamma' entries must be numbers");
    net.gamma.push_back(g.get<double>());
  }

  int level_no = 0;
  for (const auto& lj : root["levels"]) {
    ++level_no;
    const std::string where = "level " + std::to_string(level_no);
    if (!lj.is_object()) throw ParseError(where + " must be an object");
    expect_keys(lj, where, {"nodes", "edges", "od_pairs", "hop_limit"});

    LevelGraph g;
    if (!lj.contains("nodes") || !lj["nodes"].is_array()) {
      throw ParseError(where + ": 'nodes' must be an array");
    }
    for (const auto& n : lj["nodes"]) {
      if (!n.is_string()) throw ParseError(where + ": node ids must be strings");
      g.nodes.push_back(n.get<std::string>());
    }

    if (lj.contains("edges")) {
      if (!lj["edges"].is_array()) throw ParseError(where + ": 'edges' must be an array");
      for (const auto& ej : lj["edges"]) {
        const std::string ew = where + ", edge '" +
                               (ej.is_object() && ej.contains("id") && ej["id"].is_string()
                                    ? ej["id"].get<std::string>()
                                    : "?") +
                               "'";
        if (!ej.is_object()) throw ParseError(ew + " must be an object");
        Edge e;
        e.id = string_at(ej, "id", ew);
        e.tail = string_at(ej, "tail", ew);
        e.head = string_at(ej, "head", ew);
        const std::string kind = string_at(ej, "kind", ew);
        if (kind == "cost") {
          expect_keys(ej, ew, {"id", "tail", "head", "kind", "cost"});
          if (!ej.contains("cost")) throw ParseError(ew + ": missing 'cost'");
          e.kind = EdgeKind::Cost;
          e.cost = parse_cost(ej["cost"], ew + " cost");
        } else if (kind == "expansion") {
          expect_keys(ej, ew, {"id", "tail", "head", "kind", "expands_to"});
          e.kind = EdgeKind::Expansion;
          const double idx = number_at(ej, "expands_to", ew);
          e.expands_to = static_cast<int>(idx);
        } else {
          throw ParseError(ew + ": kind must be 'cost' or 'expansion'");
        }
        g.edges.push_back(std::move(e));
      }
    }

    if (lj.contains("od_pairs")) {
      if (!lj["od_pairs"].is_array()) throw ParseError(where + ": 'od_pairs' must be an array");
      for (const auto& oj : lj["od_pairs"]) {
        const std::string ow = where + " od pair";
        if (!oj.is_object()) throw ParseError(ow + " must be an object");
        expect_keys(oj, ow, {"origin", "destination"});
        g.od_pairs.push_back({string_at(oj, "origin", ow), string_at(oj, "destination", ow)});
      }
    }
    if (lj.contains("hop_limit")) {
      if (!lj["hop_limit"].is_number_integer()) {
        throw ParseError(where + ": 'hop_limit' must be an integer");
      }
      g.hop_limit = lj["hop_limit"].get<int>();
    }
    net.levels.push_back(std::move(g));
  }

  net.demands.assign(net.levels[0].od_pairs.size(), 0.0);
  if (root.contains("demands")) {
    if (!root["demands"].is_array()) throw ParseError("'demands' must be an array");
    std::set<int> seen;
    for (const auto& dj : root["demands"]) {
      if (!dj.is_object()) throw ParseError("'demands' entries must be objects");
      expect_keys(dj, "demand entry", {"od", "value"});
      const int od = static_cast<int>(number_at(dj, "od", "demand entry"));
      if (od < 0 || od >= static_cast<int>(net.demands.size())) {
        throw ParseError("demand entry references OD index " + std::to_string(od) +
                         " out of range");
      }
      if (!seen.insert(od).second) {
        throw ParseError("duplicate demand entry for OD index " + std::to_string(od));
      }
      net.demands[od] = number_at(dj, "value", "demand entry");
    }
  }
  return net;
}

HierNetwork load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open network file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_network(buf.str());
}

std::string serialize_network(const HierNetwork& net) {
  json root;
  root["levels"] = json::array();
  for (const LevelGraph& g : net.levels) {
    json lj;
    lj["nodes"] = g.nodes;
    lj["edges"] = json::array();
    for (const Edge& e : g.edges) {
      json ej;
      ej["id"] = e.id;
      ej["tail"] = e.tail;
      ej["head"] = e.head;
      if (e.kind == EdgeKind::Cost) {
        ej["kind"] = "cost";
        ej["cost"] = cost_to_json(e.cost);
      } else {
        ej["kind"] = "expansion";
        ej["expands_to"] = e.expands_to;
      }
      lj["edges"].push_back(std::move(ej));
    }
    lj["od_pairs"] = json::array();
    for (const OdPair& od : g.od_pairs) {
      lj["od_pairs"].push_back({{"origin", od.origin}, {"destination", od.destination}});
    }
    lj["hop_limit"] = g.hop_limit;
    root["levels"].push_back(std::move(lj));
  }
  root["gamma"] = net.gamma;
  root["demands"] = json::array();
  for (std::size_t od = 0; od < net.demands.size(); ++od) {
    root["demands"].push_back({{"od", od}, {"value", net.demands[od]}});
  }
  return root.dump(2) + "\n";
}

void save_network(const HierNetwork& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write network file '" + path + "'");
  out << serialize_network(net);
}

} // namespace nesteq
