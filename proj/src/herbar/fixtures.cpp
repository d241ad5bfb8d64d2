#include "herbar/fixtures.hpp"

#include "herbar/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace herbar::fixtures {

namespace {

struct Color {
  std::uint8_t r, g, b;
};

Color random_color(XorShift64Star& rng) {
  return {static_cast<std::uint8_t>(rng.below(256)), static_cast<std::uint8_t>(rng.below(256)),
          static_cast<std::uint8_t>(rng.below(256))};
}

void put(ColorImage& img, int x, int y, Color c) {
  std::uint8_t* p = img.px(x, y);
  p[0] = c.r;
  p[1] = c.g;
  p[2] = c.b;
  p[3] = 255;
}

// Fills every pixel whose center satisfies `inside`, scanning the given bounding box.
template <typename Pred>
void fill_shape(ColorImage& img, double x0, double y0, double x1, double y1, Color c, Pred inside) {
  const int xa = std::max(0, static_cast<int>(std::floor(x0)));
  const int ya = std::max(0, static_cast<int>(std::floor(y0)));
  const int xb = std::min(img.width() - 1, static_cast<int>(std::ceil(x1)));
  const int yb = std::min(img.height() - 1, static_cast<int>(std::ceil(y1)));
  for (int y = ya; y <= yb; ++y)
    for (int x = xa; x <= xb; ++x)
      if (inside(x + 0.5, y + 0.5)) put(img, x, y, c);
}

std::string pad3(int i) {
  std::string s = std::to_string(i);
  return std::string(3 - std::min<std::size_t>(3, s.size()), '0') + s;
}

}  // namespace

const std::vector<HerbName>& herb_names() {
  static const std::vector<HerbName> names = {
      {"lingzhi", "灵芝", "Reishi mushroom"},
      {"aiye", "艾叶", "Mugwort leaf"},
      {"baijitian", "巴戟天", "Morinda root"},
      {"baiji", "白及", "Bletilla tuber"},
      {"renshen", "人参", "Ginseng root"},
      {"dangshen", "党参", "Codonopsis root"},
      {"huangqi", "黄芪", "Astragalus root"},
      {"gancao", "甘草", "Licorice root"},
      {"danggui", "当归", "Chinese angelica root"},
      {"chuanxiong", "川芎", "Szechwan lovage rhizome"},
      {"baishao", "白芍", "White peony root"},
      {"chishao", "赤芍", "Red peony root"},
      {"shudihuang", "熟地黄", "Prepared rehmannia root"},
      {"heshouwu", "何首乌", "Fleeceflower root"},
      {"gouqizi", "枸杞子", "Goji berry"},
      {"juhua", "菊花", "Chrysanthemum flower"},
      {"jinyinhua", "金银花", "Honeysuckle flower"},
      {"lianqiao", "连翘", "Forsythia fruit"},
      {"banlangen", "板蓝根", "Isatis root"},
      {"huangqin", "黄芩", "Baical skullcap root"},
      {"huanglian", "黄连", "Coptis rhizome"},
      {"huangbai", "黄柏", "Phellodendron bark"},
      {"zhizi", "栀子", "Gardenia fruit"},
      {"jiegeng", "桔梗", "Platycodon root"},
      {"banxia", "半夏", "Pinellia tuber"},
      {"chenpi", "陈皮", "Tangerine peel"},
      {"fuling", "茯苓", "Poria"},
      {"baizhu", "白术", "Atractylodes rhizome"},
      {"cangzhu", "苍术", "Black atractylodes rhizome"},
      {"houpo", "厚朴", "Magnolia bark"},
      {"zhishi", "枳实", "Immature bitter orange"},
      {"muxiang", "木香", "Costus root"},
      {"xiangfu", "香附", "Cyperus rhizome"},
      {"yanhusuo", "延胡索", "Corydalis tuber"},
      {"danshen", "丹参", "Red sage root"},
      {"honghua", "红花", "Safflower"},
      {"taoren", "桃仁", "Peach kernel"},
      {"yimucao", "益母草", "Motherwort"},
      {"niuxi", "牛膝", "Achyranthes root"},
      {"duzhong", "杜仲", "Eucommia bark"},
      {"xuduan", "续断", "Teasel root"},
      {"tusizi", "菟丝子", "Dodder seed"},
      {"roucongrong", "肉苁蓉", "Cistanche stem"},
      {"yinyanghuo", "淫羊藿", "Epimedium leaf"},
      {"shanyao", "山药", "Chinese yam"},
      {"shanzhuyu", "山茱萸", "Cornelian cherry"},
      {"zexie", "泽泻", "Water plantain rhizome"},
      {"mudanpi", "牡丹皮", "Tree peony bark"},
      {"maidong", "麦冬", "Ophiopogon tuber"},
      {"tianmendong", "天门冬", "Asparagus tuber"},
      {"yuzhu", "玉竹", "Fragrant Solomon's seal rhizome"},
      {"huangjing", "黄精", "Polygonatum rhizome"},
      {"baihe", "百合", "Lily bulb"},
      {"shihu", "石斛", "Dendrobium stem"},
      {"wuweizi", "五味子", "Schisandra berry"},
      {"suanzaoren", "酸枣仁", "Sour jujube seed"},
      {"yuanzhi", "远志", "Polygala root"},
      {"shichangpu", "石菖蒲", "Grassleaf sweetflag rhizome"},
      {"tianma", "天麻", "Gastrodia tuber"},
      {"gouteng", "钩藤", "Gambir vine"},
      {"chaihu", "柴胡", "Bupleurum root"},
      {"shengma", "升麻", "Black cohosh rhizome"},
      {"gegen", "葛根", "Kudzu root"},
      {"bohe", "薄荷", "Field mint"},
      {"jingjie", "荆芥", "Schizonepeta herb"},
      {"fangfeng", "防风", "Saposhnikovia root"},
      {"qianghuo", "羌活", "Notopterygium root"},
      {"duhuo", "独活", "Pubescent angelica root"},
      {"baizhi", "白芷", "Dahurian angelica root"},
      {"xixin", "细辛", "Asarum herb"},
      {"mahuang", "麻黄", "Ephedra stem"},
      {"guizhi", "桂枝", "Cinnamon twig"},
      {"zisu", "紫苏", "Perilla leaf"},
      {"sangye", "桑叶", "Mulberry leaf"},
      {"niubangzi", "牛蒡子", "Burdock fruit"},
      {"juemingzi", "决明子", "Cassia seed"},
      {"xiakucao", "夏枯草", "Self-heal spike"},
      {"pugongying", "蒲公英", "Dandelion"},
      {"yuxingcao", "鱼腥草", "Houttuynia herb"},
      {"cheqianzi", "车前子", "Plantain seed"},
      {"yinchen", "茵陈", "Capillary wormwood"},
      {"jinqiancao", "金钱草", "Lysimachia herb"},
      {"dahuang", "大黄", "Rhubarb root"},
      {"sanqi", "三七", "Notoginseng root"},
      {"puhuang", "蒲黄", "Cattail pollen"},
      {"xianhecao", "仙鹤草", "Agrimony herb"},
      {"dazao", "大枣", "Jujube fruit"},
      {"shengjiang", "生姜", "Fresh ginger rhizome"},
  };
  return names;
}

std::vector<HerbEntry> synthetic_catalog() {
  static constexpr const char* kAreas[] = {"Northeast China", "North China", "East China", "Central China",
                                           "South China", "Southwest China", "Northwest China", "Tibet Plateau",
                                           "Yunnan-Guizhou Plateau", "Sichuan Basin"};
  static constexpr const char* kCycles[] = {"annual", "biennial", "perennial"};
  std::vector<HerbEntry> out;
  int i = 0;
  for (const HerbName& h : herb_names()) {
    const std::string tag = " [synthetic fixture text #" + pad3(++i) + "]";
    HerbEntry e;
    e.content_id = h.id;
    e.name_cn = h.cn;
    e.name_en = h.en;
    e.source_area = std::string(kAreas[i % 10]) + tag;
    e.usage = "Placeholder usage notes for " + std::string(h.en) + "." + tag;
    e.morphology = {"Root description for " + std::string(h.en) + "." + tag,
                    "Stem description for " + std::string(h.en) + "." + tag,
                    "Leaf description for " + std::string(h.en) + "." + tag,
                    "Seed description for " + std::string(h.en) + "." + tag};
    e.ecology = {"Growth environment placeholder (" + std::string(kAreas[(i + 3) % 10]) + ")." + tag,
                 std::string(kCycles[i % 3]) + tag};
    out.push_back(std::move(e));
  }
  return out;
}

std::pair<int, int> picture_size(std::uint64_t seed) {
  XorShift64Star rng(seed * 0x2545F4914F6CDD1DULL + 1);
  return {320 + static_cast<int>(rng.below(5)) * 20, 300 + static_cast<int>(rng.below(5)) * 20};
}

ColorImage herb_picture(std::uint64_t seed, int width, int height) {
  XorShift64Star rng(seed ^ 0xA0761D6478BD642FULL);
  ColorImage img(width, height);
  const Color top = random_color(rng);
  const Color bottom = random_color(rng);
  for (int y = 0; y < height; ++y) {
    const double f = static_cast<double>(y) / (height - 1);
    const Color c{static_cast<std::uint8_t>(top.r + f * (bottom.r - top.r)),
                  static_cast<std::uint8_t>(top.g + f * (bottom.g - top.g)),
                  static_cast<std::uint8_t>(top.b + f * (bottom.b - top.b))};
    for (int x = 0; x < width; ++x) put(img, x, y, c);
  }

  const int n_shapes = 90 + static_cast<int>(rng.below(30));
  for (int s = 0; s < n_shapes; ++s) {
    const Color c = random_color(rng);
    const double cx = rng.uniform() * width;
    const double cy = rng.uniform() * height;
    const double size = 10 + rng.uniform() * 45;
    switch (rng.below(3)) {
      case 0: {  // rotated rectangle
        const double a = rng.uniform() * std::numbers::pi;
        const double hw = size * (0.4 + 0.6 * rng.uniform());
        const double hh = size * (0.2 + 0.6 * rng.uniform());
        const double ca = std::cos(a), sa = std::sin(a);
        const double r = std::hypot(hw, hh);
        fill_shape(img, cx - r, cy - r, cx + r, cy + r, c, [&](double x, double y) {
          const double u = (x - cx) * ca + (y - cy) * sa;
          const double v = -(x - cx) * sa + (y - cy) * ca;
          return std::abs(u) <= hw && std::abs(v) <= hh;
        });
        break;
      }
      case 1: {  // ellipse
        const double rx = size * (0.3 + 0.7 * rng.uniform());
        const double ry = size * (0.3 + 0.7 * rng.uniform());
        fill_shape(img, cx - rx, cy - ry, cx + rx, cy + ry, c, [&](double x, double y) {
          const double u = (x - cx) / rx, v = (y - cy) / ry;
          return u * u + v * v <= 1.0;
        });
        break;
      }
      default: {  // triangle
        double px[3], py[3];
        for (int k = 0; k < 3; ++k) {
          px[k] = cx + (rng.uniform() * 2 - 1) * size;
          py[k] = cy + (rng.uniform() * 2 - 1) * size;
        }
        const double x0 = std::min({px[0], px[1], px[2]}), x1 = std::max({px[0], px[1], px[2]});
        const double y0 = std::min({py[0], py[1], py[2]}), y1 = std::max({py[0], py[1], py[2]});
        fill_shape(img, x0, y0, x1, y1, c, [&](double x, double y) {
          auto edge = [&](int i, int j) { return (px[j] - px[i]) * (y - py[i]) - (py[j] - py[i]) * (x - px[i]); };
          const double e0 = edge(0, 1), e1 = edge(1, 2), e2 = edge(2, 0);
          return (e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0);
        });
        break;
      }
    }
  }
  return img;
}

ColorImage low_texture_picture(int width, int height) {
  ColorImage img(width, height, 255, 255, 255);
  const int side = 30;
  const int x0 = (width - side) / 2;
  const int y0 = (height - side) / 2;
  for (int y = y0; y < y0 + side; ++y)
    for (int x = x0; x < x0 + side; ++x) put(img, x, y, {60, 110, 40});
  return img;
}

}  // namespace herbar::fixtures
