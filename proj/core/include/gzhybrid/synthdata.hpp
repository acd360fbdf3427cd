#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gzhybrid/image.hpp"
#include "gzhybrid/rng.hpp"
#include "gzhybrid/schema.hpp"

namespace gzhybrid {

// Ground-truth morphology of one procedural galaxy.
struct GalaxyParams {
  double ellipticity = 0.0;      // [0, 1)
  double orientation = 0.0;      // radians
  double bulge_fraction = 0.5;   // [0, 1]
  bool has_bar = false;
  double bar_strength = 0.0;     // [0, 1]
  int arm_count = 0;             // {0, 2, 4}
  double winding = 0.4;          // spiral pitch parameter
  bool has_ring = false;
  double ring_radius = 0.35;     // fraction of image half-size
  double ring_width = 0.06;      // must be < ring_radius
  double noise_level = 0.02;

  void validate() const;
};

// Elliptical Sersic-like profile plus optional bar, logarithmic spiral arms,
// additive ring annulus and Gaussian pixel noise. Deterministic given rng.
Image generate_galaxy(const GalaxyParams& params, int size, Rng& rng);

// Elliptical radius of a pixel in units of the image half-size; the same
// geometry the renderer uses, exposed so tests can build annulus masks.
double elliptical_radius(const GalaxyParams& params, int size, int y, int x);

// Random morphology draw; ring presence is a caller-supplied probability.
GalaxyParams sample_galaxy_params(Rng& rng, double ring_probability);

// Deterministic per-question answer probabilities for the desk schema, plus
// the draw distribution for the per-question response totals N_q.
struct SyntheticCampaignTruth {
  int votes_min = 5;
  int votes_max = 40;

  // rho over the question's answers; simplex-valued.
  std::vector<double> answer_probabilities(const std::string& question_id,
                                           const GalaxyParams& params) const;
};

// Draws N_q and k ~ Multinomial(N_q, rho) for every question of `campaign`.
VoteRecord simulate_votes(const SyntheticCampaignTruth& truth,
                          const GalaxyParams& params, const std::string& galaxy_id,
                          const std::string& campaign, const AnswerSchema& schema,
                          Rng& rng);

// The two-campaign desk schema document (JSON text); loaded through the same
// machinery as any external schema document.
const std::string& desk_schema_document();

struct DatasetRecord {
  std::string id;
  std::string image_path;  // relative to the dataset root
  std::string campaign;
  std::string split;  // train / val / test / unlabelled / ring_train / ring_test
  std::optional<VoteRecord> votes;
  std::optional<int> ring_label;         // 0/1 for ring-task records
  std::vector<std::uint8_t> pixels;      // in-memory image; empty when lazy
};

// Records plus their schema. Images are served from memory when present,
// otherwise read from root/image_path. Read-only after construction.
class Dataset {
 public:
  AnswerSchema schema;
  std::string schema_document;  // JSON text the schema was loaded from
  int image_size = 64;
  std::filesystem::path root;
  std::vector<DatasetRecord> records;

  std::vector<std::size_t> split_indices(const std::string& split) const;
  Image image(std::size_t index) const;
  // Encoded votes for labelled records (empty counts otherwise).
  const VoteVector& encoded_votes(std::size_t index) const;
  bool labelled(std::size_t index) const { return records[index].votes.has_value(); }

  // Builds the encoded-vote cache; called by make_dataset / load_catalog.
  void finalize();

 private:
  std::vector<VoteVector> encoded_;
};

struct GenerateConfig {
  int labelled = 2000;
  int unlabelled = 5000;
  int rings = 1000;
  int image_size = 64;
  int raters = 10;                      // ring raters, majority vote
  double rater_accuracy = 0.92;         // 1.0 gives noise-free labels
  double ring_prob_background = 0.25;   // ring incidence outside the ring task
  int votes_min = 5;
  int votes_max = 40;

  void validate() const;
};

// Deterministic synthetic dataset, images held in memory. Pretraining
// records split 70/10/20, ring-task records 50/50.
Dataset make_dataset(const GenerateConfig& config, std::uint64_t seed);

// Writes schema.json, catalog.csv, manifest.json and images/ under dir.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);

// Loads a catalog written by write_dataset or an external export in the same
// format. The schema document must sit next to the catalog as schema.json.
Dataset load_catalog(const std::filesystem::path& catalog_path,
                     const std::filesystem::path& image_dir);
Dataset load_catalog(const std::filesystem::path& catalog_path,
                     const std::filesystem::path& image_dir,
                     const AnswerSchema& schema, std::string schema_document);

// Convenience: load_catalog(dir/catalog.csv, dir/images).
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace gzhybrid
