// Generates the synthetic fixture set: herb pictures, a build-db manifest,
// the 88-entry catalog and wireframe models.
#include "herbar/content.hpp"
#include "herbar/fixtures.hpp"
#include "herbar/png_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace herbar;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

json edges_json(const std::vector<std::pair<int, int>>& edges) {
  json out = json::array();
  for (auto [a, b] : edges) out.push_back({a, b});
  return out;
}

// Box standing on the card; the card spans x in [0,1], y in [0,aspect].
json box_model(const std::string& name, double x0, double y0, double x1, double y1, double height) {
  json v = json::array();
  for (double z : {0.0, height}) {
    v.push_back({x0, y0, z});
    v.push_back({x1, y0, z});
    v.push_back({x1, y1, z});
    v.push_back({x0, y1, z});
  }
  return {{"name", name},
          {"vertices", v},
          {"edges", edges_json({{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6}, {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6},
                                {3, 7}})}};
}

// A stalk with a ring cap, loosely mushroom shaped.
json mushroom_model(const std::string& name) {
  json v = json::array();
  std::vector<std::pair<int, int>> e;
  const double cx = 0.5, cy = 0.45;
  v.push_back({cx, cy, 0.0});
  v.push_back({cx, cy, 0.25});
  e.push_back({0, 1});
  const int ring = 12;
  for (int i = 0; i < ring; ++i) {
    const double a = 2.0 * std::numbers::pi * i / ring;
    v.push_back({cx + 0.25 * std::cos(a), cy + 0.25 * std::sin(a), 0.22});
  }
  for (int i = 0; i < ring; ++i) {
    e.push_back({2 + i, 2 + (i + 1) % ring});
    if (i % 3 == 0) e.push_back({1, 2 + i});
  }
  return {{"name", name}, {"vertices", v}, {"edges", edges_json(e)}};
}

// A forked root with a short stem.
json root_model(const std::string& name) {
  json v = json::array({{0.5, 0.2, 0.0},
                        {0.5, 0.2, 0.3},
                        {0.5, 0.45, 0.05},
                        {0.3, 0.75, 0.02},
                        {0.7, 0.75, 0.02},
                        {0.5, 0.85, 0.0},
                        {0.4, 0.1, 0.35},
                        {0.6, 0.1, 0.35}});
  return {{"name", name},
          {"vertices", v},
          {"edges", edges_json({{0, 1}, {0, 2}, {2, 3}, {2, 4}, {2, 5}, {1, 6}, {1, 7}})}};
}

// A single leaf blade with a midrib.
json leaf_model(const std::string& name) {
  json v = json::array({{0.5, 0.1, 0.0},
                        {0.3, 0.4, 0.08},
                        {0.5, 0.8, 0.15},
                        {0.7, 0.4, 0.08},
                        {0.5, 0.45, 0.1}});
  return {{"name", name},
          {"vertices", v},
          {"edges", edges_json({{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 4}, {4, 2}})}};
}

void write_models(const fs::path& dir) {
  fs::create_directories(dir);
  write_text(dir / "default.json", box_model("default", 0.25, 0.25, 0.75, 0.65, 0.3).dump(2) + "\n");
  write_text(dir / "lingzhi.json", mushroom_model("lingzhi").dump(2) + "\n");
  write_text(dir / "renshen.json", root_model("renshen").dump(2) + "\n");
  write_text(dir / "aiye.json", leaf_model("aiye").dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"herbar-fixtures: write the synthetic fixture set"};
  fs::path out_dir;
  int count = fixtures::kCatalogSize;
  bool low_texture = false;
  bool catalog_only = false;
  app.add_option("out", out_dir, "output directory")->required();
  app.add_option("--count", count, "number of textured herb pictures")
      ->check(CLI::Range(0, fixtures::kCatalogSize));
  app.add_flag("--low-texture", low_texture, "append one low-texture picture for the next herb");
  app.add_flag("--catalog-only", catalog_only, "write only catalog.json and models/");
  CLI11_PARSE(app, argc, argv);

  try {
    fs::create_directories(out_dir);
    Catalog catalog;
    for (auto& e : fixtures::synthetic_catalog()) catalog.add(std::move(e));
    write_text(out_dir / "catalog.json", serialize_catalog(catalog));
    write_models(out_dir / "models");
    if (catalog_only) return 0;

    const auto& names = fixtures::herb_names();
    if (low_texture && count >= fixtures::kCatalogSize) {
      std::cerr << "error: --low-texture needs --count below " << fixtures::kCatalogSize << "\n";
      return 2;
    }
    fs::create_directories(out_dir / "targets");
    json manifest = json::array();
    auto add = [&](const std::string& name, const ColorImage& img) {
      const std::string rel = "targets/" + name + ".png";
      write_png(img, out_dir / rel);
      manifest.push_back({{"name", name}, {"image_path", rel}, {"content_id", name}});
    };
    for (int i = 0; i < count; ++i) {
      const auto seed = static_cast<std::uint64_t>(i + 1);
      const auto [w, h] = fixtures::picture_size(seed);
      add(names[i].id, fixtures::herb_picture(seed, w, h));
    }
    if (low_texture) add(names[count].id, fixtures::low_texture_picture(320, 320));
    write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
