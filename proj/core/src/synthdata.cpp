#include "gzhybrid/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gzhybrid/errors.hpp"
#include "gzhybrid/parallel.hpp"

namespace gzhybrid {

namespace {

constexpr double kPi = 3.14159265358979323846;

double clamp(double v, double lo, double hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

}  // namespace

void GalaxyParams::validate() const {
  if (ellipticity < 0.0 || ellipticity >= 1.0)
    throw DataError("galaxy params: ellipticity must lie in [0, 1)");
  if (bulge_fraction < 0.0 || bulge_fraction > 1.0)
    throw DataError("galaxy params: bulge fraction must lie in [0, 1]");
  if (bar_strength < 0.0 || bar_strength > 1.0)
    throw DataError("galaxy params: bar strength must lie in [0, 1]");
  if (arm_count != 0 && arm_count != 2 && arm_count != 4)
    throw DataError("galaxy params: arm count must be 0, 2 or 4");
  if (has_ring && !(ring_radius > ring_width))
    throw DataError("galaxy params: ring radius must exceed ring width");
  if (noise_level < 0.0) throw DataError("galaxy params: noise level must be >= 0");
}

double elliptical_radius(const GalaxyParams& p, int size, int y, int x) {
  const double half = 0.5 * size;
  const double cx = 0.5 * (size - 1);
  const double cy = 0.5 * (size - 1);
  const double dx = (x - cx) / half;
  const double dy = (y - cy) / half;
  const double ca = std::cos(p.orientation), sa = std::sin(p.orientation);
  const double xr = ca * dx + sa * dy;
  const double yr = -sa * dx + ca * dy;
  const double q = 1.0 - p.ellipticity;
  return std::sqrt(xr * xr + (yr / q) * (yr / q));
}

Image generate_galaxy(const GalaxyParams& p, int size, Rng& rng) {
  p.validate();
  Image img(3, size, size);

  const double half = 0.5 * size;
  const double cx = 0.5 * (size - 1);
  const double cy = 0.5 * (size - 1);
  const double ca = std::cos(p.orientation), sa = std::sin(p.orientation);
  const double q = 1.0 - p.ellipticity;

  // Per-component RGB tints: reddish bulge/bar, bluish disk/arms/ring.
  static constexpr double kBulge[3] = {1.00, 0.85, 0.65};
  static constexpr double kDisk[3] = {0.75, 0.85, 1.00};
  static constexpr double kBar[3] = {1.00, 0.92, 0.70};
  static constexpr double kArm[3] = {0.70, 0.90, 1.00};
  static constexpr double kRing[3] = {0.80, 0.90, 1.00};

  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double dx = (x - cx) / half;
      const double dy = (y - cy) / half;
      const double xr = ca * dx + sa * dy;
      const double yr = -sa * dx + ca * dy;
      const double re = std::sqrt(xr * xr + (yr / q) * (yr / q));
      const double rc = std::sqrt(dx * dx + dy * dy);

      const double bulge = std::exp(-std::pow(rc / 0.16, 0.85));
      const double disk = std::exp(-std::pow(re / 0.42, 1.15));

      double bar = 0.0;
      if (p.has_bar) {
        const double bx = xr / 0.34, by = yr / 0.08;
        bar = 0.8 * p.bar_strength * std::exp(-(bx * bx + by * by));
      }

      double arms = 0.0;
      if (p.arm_count > 0 && re > 1e-6) {
        const double phi = std::atan2(yr / q, xr);
        const double phase =
            double(p.arm_count) * (phi - std::log(re) / p.winding);
        const double c = std::cos(phase);
        if (c > 0.0) {
          const double envelope =
              std::exp(-re / 0.5) * clamp((re - 0.10) / 0.10, 0.0, 1.0);
          arms = 0.55 * c * c * c * envelope;
        }
      }

      double ring = 0.0;
      if (p.has_ring) {
        const double d = (re - p.ring_radius) / p.ring_width;
        ring = 0.65 * std::exp(-d * d);
      }

      for (int c = 0; c < 3; ++c) {
        const double flux = p.bulge_fraction * bulge * kBulge[c] +
                            (1.0 - p.bulge_fraction) *
                                (disk * kDisk[c] + bar * kBar[c] + arms * kArm[c]) +
                            ring * kRing[c];
        // Soft tone map keeps bright centers inside [0, 1).
        img.at(c, y, x) = float(1.0 - std::exp(-1.9 * flux));
      }
    }
  }

  if (p.noise_level > 0.0) {
    for (auto& v : img.px) {
      double nv = double(v) + p.noise_level * rng.normal();
      v = float(clamp(nv, 0.0, 1.0));
    }
  }
  return img;
}

GalaxyParams sample_galaxy_params(Rng& rng, double ring_probability) {
  GalaxyParams p;
  p.ellipticity = rng.uniform(0.0, 0.8);
  p.orientation = rng.uniform(0.0, 2.0 * kPi);
  p.bulge_fraction = rng.uniform(0.05, 0.95);
  p.has_bar = rng.bernoulli(0.4);
  p.bar_strength = p.has_bar ? rng.uniform(0.3, 1.0) : 0.0;
  const double u = rng.uniform();
  p.arm_count = u < 0.45 ? 0 : (u < 0.85 ? 2 : 4);
  p.winding = rng.uniform(0.2, 0.6);
  p.has_ring = rng.bernoulli(ring_probability);
  p.ring_radius = rng.uniform(0.25, 0.45);
  p.ring_width = rng.uniform(0.04, 0.09);
  p.noise_level = rng.uniform(0.01, 0.04);
  return p;
}

// ---------------------------------------------------------------------------
// Desk schema and its ground-truth answer distributions.
// ---------------------------------------------------------------------------

const std::string& desk_schema_document() {
  static const std::string doc = R"({
  "campaigns": [
    {
      "name": "desk-a",
      "questions": [
        { "id": "a-smooth", "answers": ["a-smooth/smooth", "a-smooth/featured", "a-smooth/artifact"] },
        { "id": "a-edgeon", "answers": ["a-edgeon/yes", "a-edgeon/no"] },
        { "id": "a-bar", "answers": ["a-bar/none", "a-bar/weak", "a-bar/strong"] },
        { "id": "a-spiral", "answers": ["a-spiral/yes", "a-spiral/no"] },
        { "id": "a-bulge", "answers": ["a-bulge/none", "a-bulge/small", "a-bulge/large", "a-bulge/dominant"] }
      ]
    },
    {
      "name": "desk-b",
      "questions": [
        { "id": "b-smooth", "answers": ["b-smooth/smooth", "b-smooth/featured", "b-smooth/artifact"] },
        { "id": "b-round", "answers": ["b-round/round", "b-round/inbetween", "b-round/cigar"] },
        { "id": "b-spiral", "answers": ["b-spiral/yes", "b-spiral/no"] },
        { "id": "b-arms", "answers": ["b-arms/none", "b-arms/two", "b-arms/four"] },
        { "id": "b-winding", "answers": ["b-winding/tight", "b-winding/medium", "b-winding/loose"] },
        { "id": "b-unusual", "answers": ["b-unusual/nothing", "b-unusual/asymmetry", "b-unusual/other"] }
      ]
    }
  ]
})";
  return doc;
}

namespace {

std::vector<double> normalized(std::vector<double> w) {
  double sum = 0.0;
  for (auto& v : w) {
    v = std::max(v, 0.01);  // keep every answer reachable
    sum += v;
  }
  for (auto& v : w) v /= sum;
  return w;
}

std::vector<double> soft_bin(double value, const std::vector<double>& centers,
                             double width) {
  std::vector<double> w(centers.size());
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double d = (value - centers[i]) / width;
    w[i] = std::exp(-d * d);
  }
  return w;
}

}  // namespace

std::vector<double> SyntheticCampaignTruth::answer_probabilities(
    const std::string& question_id, const GalaxyParams& p) const {
  const std::string q = question_id.substr(question_id.find('-') + 1);
  if (q == "smooth") {
    const double featured_drive = 0.55 * (p.arm_count > 0 ? 1.0 : 0.0) +
                                  0.35 * (p.has_bar ? p.bar_strength : 0.0) +
                                  0.30 * (p.has_ring ? 1.0 : 0.0);
    const double artifact = 0.02 + 0.5 * p.noise_level;
    const double featured = clamp(0.10 + featured_drive, 0.0, 0.95) * (1.0 - artifact);
    return normalized({1.0 - featured - artifact, featured, artifact});
  }
  if (q == "edgeon") {
    const double yes = 1.0 / (1.0 + std::exp(-9.0 * (p.ellipticity - 0.62)));
    return normalized({yes, 1.0 - yes});
  }
  if (q == "bar") {
    if (!p.has_bar) return normalized({0.85, 0.12, 0.03});
    const double strong = clamp((p.bar_strength - 0.3) / 0.7, 0.0, 1.0);
    return normalized({0.10, 0.90 * (1.0 - strong), 0.90 * strong});
  }
  if (q == "spiral") {
    const double yes = p.arm_count > 0 ? 0.88 : 0.08;
    return normalized({yes, 1.0 - yes});
  }
  if (q == "bulge")
    return normalized(soft_bin(p.bulge_fraction, {0.08, 0.35, 0.65, 0.92}, 0.18));
  if (q == "round")
    return normalized(soft_bin(p.ellipticity, {0.10, 0.45, 0.80}, 0.18));
  if (q == "arms") {
    std::vector<double> w = {0.10, 0.10, 0.10};
    w[p.arm_count == 0 ? 0 : (p.arm_count == 2 ? 1 : 2)] = 0.80;
    return normalized(w);
  }
  if (q == "winding") {
    if (p.arm_count == 0) return normalized({1.0, 1.0, 1.0});
    return normalized(soft_bin(p.winding, {0.25, 0.40, 0.55}, 0.10));
  }
  if (q == "unusual") {
    const double asym = 0.08 + 0.45 * (p.has_ring ? 1.0 : 0.0);
    const double other = 0.05;
    return normalized({1.0 - asym - other, asym, other});
  }
  throw DataError("synthetic truth: unknown question id '" + question_id + "'");
}

VoteRecord simulate_votes(const SyntheticCampaignTruth& truth,
                          const GalaxyParams& params, const std::string& galaxy_id,
                          const std::string& campaign, const AnswerSchema& schema,
                          Rng& rng) {
  if (!schema.has_campaign(campaign))
    throw DataError("simulate_votes: unknown campaign '" + campaign + "'");
  VoteRecord record;
  record.galaxy_id = galaxy_id;
  record.campaign = campaign;
  for (std::size_t qi : schema.campaign_questions(campaign)) {
    const auto& question = schema.questions()[qi];
    const std::vector<double> rho = truth.answer_probabilities(question.id, params);
    const std::int64_t total =
        truth.votes_min + std::int64_t(rng.below(std::uint64_t(
                              truth.votes_max - truth.votes_min + 1)));
    std::vector<std::int64_t> counts(rho.size());
    rng.multinomial(total, rho, counts);
    for (std::size_t ai = 0; ai < counts.size(); ++ai)
      record.votes[question.answers[ai]] = counts[ai];
  }
  return record;
}

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

std::vector<std::size_t> Dataset::split_indices(const std::string& split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].split == split) out.push_back(i);
  return out;
}

Image Dataset::image(std::size_t index) const {
  const auto& rec = records[index];
  if (!rec.pixels.empty())
    return image_from_u8(rec.pixels, 3, image_size, image_size);
  const auto path = root / rec.image_path;
  if (!std::filesystem::exists(path))
    throw DataError("missing image file for galaxy '" + rec.id + "': " +
                    path.string());
  return read_ppm(path);
}

const VoteVector& Dataset::encoded_votes(std::size_t index) const {
  return encoded_.at(index);
}

void Dataset::finalize() {
  encoded_.clear();
  encoded_.reserve(records.size());
  for (const auto& rec : records) {
    if (rec.votes)
      encoded_.push_back(encode_votes(*rec.votes, schema));
    else
      encoded_.push_back(VoteVector{std::vector<std::int64_t>(schema.answer_count(), 0)});
  }
}

void GenerateConfig::validate() const {
  if (labelled < 0 || unlabelled < 0 || rings < 0)
    throw ConfigError("gen: counts must be nonnegative");
  if (labelled + unlabelled + rings == 0)
    throw ConfigError("gen: dataset would be empty");
  if (image_size < 16 || image_size > 1024)
    throw ConfigError("gen: image size out of range (capacity 16..1024)");
  if (raters < 1) throw ConfigError("gen: needs at least one rater");
  if (rater_accuracy < 0.0 || rater_accuracy > 1.0)
    throw ConfigError("gen: rater accuracy must lie in [0, 1]");
  if (votes_min < 1 || votes_max < votes_min)
    throw ConfigError("gen: vote range invalid");
}

Dataset make_dataset(const GenerateConfig& config, std::uint64_t seed) {
  config.validate();
  Dataset ds;
  ds.schema_document = desk_schema_document();
  ds.schema = AnswerSchema::from_document(ds.schema_document);
  ds.image_size = config.image_size;

  const int total = config.labelled + config.unlabelled + config.rings;
  ds.records.resize(std::size_t(total));

  const SyntheticCampaignTruth truth{config.votes_min, config.votes_max};
  const auto& campaigns = ds.schema.campaigns();

  // Pretraining splits 70/10/20 over the labelled pool; rings split 50/50.
  const int n_train = config.labelled * 7 / 10;
  const int n_val = config.labelled / 10;
  const int ring_train = config.rings / 2;

  parallel_for(std::size_t(total), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      DatasetRecord rec;
      char idbuf[16];
      std::snprintf(idbuf, sizeof idbuf, "gal_%06zu", i);
      rec.id = idbuf;
      rec.image_path = "images/" + rec.id + ".ppm";
      rec.campaign = campaigns[i % campaigns.size()];

      const bool is_labelled = int(i) < config.labelled;
      const bool is_unlabelled =
          !is_labelled && int(i) < config.labelled + config.unlabelled;
      const double ring_prob = is_labelled || is_unlabelled
                                   ? config.ring_prob_background
                                   : 0.5;

      Rng grng = Rng::stream(seed, "galaxy", i);
      const GalaxyParams params = sample_galaxy_params(grng, ring_prob);
      const Image img = generate_galaxy(params, config.image_size, grng);
      rec.pixels = image_to_u8(img);

      if (is_labelled) {
        const int li = int(i);
        rec.split = li < n_train ? "train" : (li < n_train + n_val ? "val" : "test");
        Rng vrng = Rng::stream(seed, "votes", i);
        rec.votes = simulate_votes(truth, params, rec.id, rec.campaign, ds.schema, vrng);
      } else if (is_unlabelled) {
        rec.split = "unlabelled";
      } else {
        const int ri = int(i) - config.labelled - config.unlabelled;
        rec.split = ri < ring_train ? "ring_train" : "ring_test";
        Rng rrng = Rng::stream(seed, "raters", i);
        int votes_ring = 0;
        for (int r = 0; r < config.raters; ++r) {
          const bool correct = rrng.bernoulli(config.rater_accuracy);
          const bool says_ring = correct ? params.has_ring : !params.has_ring;
          votes_ring += says_ring ? 1 : 0;
        }
        const int against = config.raters - votes_ring;
        if (votes_ring > against)
          rec.ring_label = 1;
        else if (votes_ring < against)
          rec.ring_label = 0;
        else
          rec.ring_label = rrng.bernoulli(0.5) ? 1 : 0;
      }
      ds.records[i] = std::move(rec);
    }
  });

  ds.finalize();
  return ds;
}

// ---------------------------------------------------------------------------
// Catalog I/O. Delimited text, comma-separated, UTF-8, LF line endings:
//   id,image_path,campaign,split,ring_label,<one column per global answer id>
// Count cells are blank for unlabelled records and for answers outside the
// record's campaign.
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = line.find(',', pos);
    if (next == std::string::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

const std::vector<std::string> kMetaColumns = {"id", "image_path", "campaign",
                                               "split", "ring_label"};

}  // namespace

void write_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "images");

  {
    std::ofstream out(dir / "schema.json", std::ios::binary);
    out << dataset.schema_document;
    if (!out) throw DataError("write_dataset: cannot write schema.json");
  }

  {
    std::ofstream out(dir / "catalog.csv", std::ios::binary);
    for (std::size_t i = 0; i < kMetaColumns.size(); ++i)
      out << (i ? "," : "") << kMetaColumns[i];
    for (std::size_t a = 0; a < dataset.schema.answer_count(); ++a)
      out << ',' << dataset.schema.answer_id(a);
    out << '\n';
    for (const auto& rec : dataset.records) {
      out << rec.id << ',' << rec.image_path << ',' << rec.campaign << ','
          << rec.split << ',';
      if (rec.ring_label) out << *rec.ring_label;
      for (std::size_t a = 0; a < dataset.schema.answer_count(); ++a) {
        out << ',';
        if (!rec.votes) continue;
        const auto it = rec.votes->votes.find(dataset.schema.answer_id(a));
        if (it != rec.votes->votes.end()) out << it->second;
      }
      out << '\n';
    }
    if (!out) throw DataError("write_dataset: cannot write catalog.csv");
  }

  {
    nlohmann::json manifest;
    manifest["image_size"] = dataset.image_size;
    nlohmann::json splits = nlohmann::json::object();
    for (const auto& name :
         {"train", "val", "test", "unlabelled", "ring_train", "ring_test"}) {
      nlohmann::json ids = nlohmann::json::array();
      for (auto i : dataset.split_indices(name)) ids.push_back(dataset.records[i].id);
      splits[name] = std::move(ids);
    }
    manifest["splits"] = std::move(splits);
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << '\n';
    if (!out) throw DataError("write_dataset: cannot write manifest.json");
  }

  for (const auto& rec : dataset.records) {
    if (rec.pixels.empty())
      throw DataError("write_dataset: record " + rec.id + " has no image data");
    write_ppm(dir / rec.image_path,
              image_from_u8(rec.pixels, 3, dataset.image_size, dataset.image_size));
  }
}

Dataset load_catalog(const std::filesystem::path& catalog_path,
                     const std::filesystem::path& image_dir,
                     const AnswerSchema& schema, std::string schema_document) {
  std::ifstream in(catalog_path, std::ios::binary);
  if (!in) throw DataError("load_catalog: cannot open " + catalog_path.string());

  Dataset ds;
  ds.schema = schema;
  ds.schema_document = std::move(schema_document);
  ds.root = image_dir.parent_path();

  std::string line;
  if (!std::getline(in, line))
    throw DataError("load_catalog: catalog has no header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.size() < kMetaColumns.size())
    throw DataError("load_catalog: header is missing the metadata columns");
  for (std::size_t i = 0; i < kMetaColumns.size(); ++i)
    if (header[i] != kMetaColumns[i])
      throw DataError("load_catalog: column " + std::to_string(i) + " must be '" +
                      kMetaColumns[i] + "', got '" + header[i] + "'");

  // Remaining columns must be known answer ids.
  std::vector<std::size_t> column_answer;  // column -> global answer position
  std::set<std::string> seen;
  std::string offenders;
  for (std::size_t i = kMetaColumns.size(); i < header.size(); ++i) {
    const auto pos = schema.answer_position(header[i]);
    if (!pos || !seen.insert(header[i]).second) {
      offenders += (offenders.empty() ? "" : ", ") + header[i];
      continue;
    }
    column_answer.push_back(*pos);
  }
  if (!offenders.empty())
    throw DataError("load_catalog: unknown or duplicate answer columns: " + offenders);

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw DataError("load_catalog: line " + std::to_string(line_no) + " has " +
                      std::to_string(fields.size()) + " fields, header has " +
                      std::to_string(header.size()));
    DatasetRecord rec;
    rec.id = fields[0];
    rec.image_path = fields[1];
    rec.campaign = fields[2];
    rec.split = fields[3];
    if (!schema.has_campaign(rec.campaign))
      throw DataError("load_catalog: line " + std::to_string(line_no) +
                      ": unknown campaign '" + rec.campaign + "'");
    if (!fields[4].empty()) {
      if (fields[4] != "0" && fields[4] != "1")
        throw DataError("load_catalog: line " + std::to_string(line_no) +
                        ": ring_label must be blank, 0 or 1");
      rec.ring_label = fields[4] == "1" ? 1 : 0;
    }

    VoteRecord votes;
    votes.galaxy_id = rec.id;
    votes.campaign = rec.campaign;
    bool any_count = false;
    for (std::size_t c = 0; c < column_answer.size(); ++c) {
      const std::string& cell = fields[kMetaColumns.size() + c];
      if (cell.empty()) continue;
      std::size_t parsed = 0;
      long long value = 0;
      try {
        value = std::stoll(cell, &parsed);
      } catch (...) {
        parsed = 0;
      }
      if (parsed != cell.size() || value < 0)
        throw DataError("load_catalog: line " + std::to_string(line_no) +
                        ": bad count '" + cell + "'");
      const std::size_t apos = column_answer[c];
      const auto& question = schema.questions()[schema.question_of_answer(apos)];
      if (question.campaign != rec.campaign)
        throw DataError("load_catalog: line " + std::to_string(line_no) + ": answer '" +
                        schema.answer_id(apos) + "' lies outside campaign '" +
                        rec.campaign + "' (structural zeros are mandatory)");
      votes.votes[schema.answer_id(apos)] = value;
      any_count = true;
    }
    if (any_count) rec.votes = std::move(votes);
    ds.records.push_back(std::move(rec));
  }

  // Image size from the first record that resolves (all images share it).
  ds.image_size = 0;
  for (const auto& rec : ds.records) {
    const auto path = ds.root / rec.image_path;
    if (std::filesystem::exists(path)) {
      const Image probe = read_ppm(path);
      ds.image_size = probe.height;
      break;
    }
  }
  if (ds.image_size == 0 && !ds.records.empty()) ds.image_size = 64;
  if (ds.records.empty()) ds.image_size = 64;

  ds.finalize();
  return ds;
}

Dataset load_catalog(const std::filesystem::path& catalog_path,
                     const std::filesystem::path& image_dir) {
  const auto schema_path = catalog_path.parent_path() / "schema.json";
  if (!std::filesystem::exists(schema_path))
    throw DataError("load_catalog: expected schema document at " +
                    schema_path.string());
  std::ifstream in(schema_path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_catalog(catalog_path, image_dir,
                      AnswerSchema::from_document(buf.str()), buf.str());
}

Dataset load_dataset(const std::filesystem::path& dir) {
  return load_catalog(dir / "catalog.csv", dir / "images");
}

}  // namespace gzhybrid
