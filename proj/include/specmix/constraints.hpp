#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "specmix/errors.hpp"
#include "specmix/image.hpp"

namespace specmix {

// A positive block: pixels that must end up in the same mixture component.
struct Block {
  std::string id;
  std::vector<std::int64_t> indices;  // sorted, unique, global table rows
};

// Positive blocks plus a symmetric negative relation among them. Pixels in
// two negatively related blocks must not share a component. Pixels outside
// every block are unconstrained.
struct ConstraintSet {
  std::vector<Block> blocks;
  std::vector<std::vector<bool>> relation;  // relation[a][b]: negatively related

  std::size_t n_blocks() const { return blocks.size(); }
  bool empty() const { return blocks.empty(); }

  bool has_negative() const {
    for (const auto& row : relation)
      for (bool v : row)
        if (v) return true;
    return false;
  }

  std::vector<int> negative_partners(std::size_t b) const {
    std::vector<int> out;
    for (std::size_t o = 0; o < relation[b].size(); ++o)
      if (relation[b][o]) out.push_back(static_cast<int>(o));
    return out;
  }

  std::int64_t constrained_pixel_count() const {
    std::int64_t n = 0;
    for (const auto& b : blocks) n += static_cast<std::int64_t>(b.indices.size());
    return n;
  }

  void validate(std::int64_t n_pixels) const {
    require(relation.size() == blocks.size(), "constraints: relation size mismatch");
    std::set<std::int64_t> seen;
    for (const auto& b : blocks) {
      require(!b.indices.empty(), "constraints: block '" + b.id + "' is empty");
      for (std::size_t i = 0; i < b.indices.size(); ++i) {
        const std::int64_t idx = b.indices[i];
        require(idx >= 0 && idx < n_pixels,
                "constraints: block '" + b.id + "' index out of range");
        require(i == 0 || b.indices[i - 1] < idx,
                "constraints: block '" + b.id + "' indices not sorted/unique");
        require(seen.insert(idx).second,
                "constraints: pixel " + std::to_string(idx) +
                    " appears in more than one block");
      }
    }
    for (std::size_t a = 0; a < relation.size(); ++a) {
      require(relation[a].size() == blocks.size(), "constraints: relation not square");
      require(!relation[a][a], "constraints: relation diagonal must be false");
      for (std::size_t b = 0; b < relation.size(); ++b)
        require(relation[a][b] == relation[b][a], "constraints: relation not symmetric");
    }
  }

  static ConstraintSet none() { return ConstraintSet{}; }
};

// Constraint document:
//   {"groups": [{"name": ..., "regions": [{"image": id, "row0":, "row1":,
//     "col0":, "col1":}]}], "negative_pairs": [[name, name], ...]}
// Region bounds are inclusive. When "negative_pairs" is absent every pair of
// groups is negatively related.
inline ConstraintSet build_constraints(const nlohmann::json& doc,
                                       const PixelTable& table) {
  require(doc.is_object() && doc.contains("groups"),
          "constraint document: missing 'groups'");
  ConstraintSet cons;
  std::map<std::string, std::size_t> group_index;
  for (const auto& jg : doc.at("groups")) {
    Block block;
    block.id = jg.at("name").get<std::string>();
    require(group_index.emplace(block.id, cons.blocks.size()).second,
            "constraint document: duplicate group '" + block.id + "'");
    std::set<std::int64_t> idx;
    for (const auto& jr : jg.at("regions")) {
      const std::string image = jr.at("image").get<std::string>();
      const ImageGeometry* geom = table.find(image);
      require(geom != nullptr, "constraint document: unknown image '" + image + "'");
      const int r0 = jr.at("row0").get<int>();
      const int r1 = jr.at("row1").get<int>();
      const int c0 = jr.at("col0").get<int>();
      const int c1 = jr.at("col1").get<int>();
      require(0 <= r0 && r0 <= r1 && r1 < geom->rows && 0 <= c0 && c0 <= c1 &&
                  c1 < geom->cols,
              "constraint document: region out of bounds in image '" + image + "'");
      for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c)
          idx.insert(geom->offset + static_cast<std::int64_t>(r) * geom->cols + c);
    }
    block.indices.assign(idx.begin(), idx.end());
    cons.blocks.push_back(std::move(block));
  }
  const std::size_t b = cons.blocks.size();
  cons.relation.assign(b, std::vector<bool>(b, false));
  if (doc.contains("negative_pairs")) {
    for (const auto& jp : doc.at("negative_pairs")) {
      require(jp.is_array() && jp.size() == 2, "constraint document: bad negative pair");
      const auto a = group_index.find(jp[0].get<std::string>());
      const auto c = group_index.find(jp[1].get<std::string>());
      require(a != group_index.end() && c != group_index.end(),
              "constraint document: negative pair names unknown group");
      require(a->second != c->second, "constraint document: group negative with itself");
      cons.relation[a->second][c->second] = true;
      cons.relation[c->second][a->second] = true;
    }
  } else {
    for (std::size_t i = 0; i < b; ++i)
      for (std::size_t j = 0; j < b; ++j)
        if (i != j) cons.relation[i][j] = true;
  }
  cons.validate(table.n());
  return cons;
}

// Index-level serialization used inside ensemble archives, where the source
// images are no longer in scope.
inline nlohmann::json constraints_to_json(const ConstraintSet& cons) {
  nlohmann::json j;
  j["blocks"] = nlohmann::json::array();
  for (const auto& b : cons.blocks)
    j["blocks"].push_back({{"id", b.id}, {"indices", b.indices}});
  nlohmann::json rel = nlohmann::json::array();
  for (std::size_t a = 0; a < cons.n_blocks(); ++a)
    for (std::size_t c = a + 1; c < cons.n_blocks(); ++c)
      if (cons.relation[a][c]) rel.push_back({a, c});
  j["negative_pairs"] = rel;
  return j;
}

inline ConstraintSet constraints_from_json(const nlohmann::json& j,
                                           std::int64_t n_pixels) {
  ConstraintSet cons;
  for (const auto& jb : j.at("blocks")) {
    Block b;
    b.id = jb.at("id").get<std::string>();
    b.indices = jb.at("indices").get<std::vector<std::int64_t>>();
    cons.blocks.push_back(std::move(b));
  }
  cons.relation.assign(cons.blocks.size(),
                       std::vector<bool>(cons.blocks.size(), false));
  for (const auto& jp : j.at("negative_pairs")) {
    const std::size_t a = jp[0].get<std::size_t>();
    const std::size_t c = jp[1].get<std::size_t>();
    cons.relation.at(a).at(c) = true;
    cons.relation.at(c).at(a) = true;
  }
  cons.validate(n_pixels);
  return cons;
}

}  // namespace specmix
