#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agora/crypto.hpp"
#include "agora/rng.hpp"

namespace agora {

// Genotype dosages are 0, 1, or 2 copies of the alternate allele.
struct Dataset {
  std::map<std::string, int> genotype;       // rsid -> dosage
  std::map<std::string, double> phenotype;   // trait -> value
  std::string owner_tag;                     // opaque, excluded from the fingerprint
};

// Canonical text: "dataset <n_snps> <n_traits>\n" then one "rsid\tdosage" line
// per SNP sorted by rsid, then one "trait\tvalue" line per trait sorted by name.
std::string canonical_text(const Dataset& d);

// Hash of the canonical text. Same content under two owner tags collides on
// purpose: that is how duplicate submissions are caught.
crypto::Digest fingerprint(const Dataset& d);

std::optional<Dataset> parse_dataset(std::string_view text, std::string* err = nullptr);

// Fraction of SNP sites with dosage exactly 1.
double heterozygosity(const Dataset& d);

// Dosage vector over the given rsids, in panel order. Empty optional if any
// rsid is absent.
std::optional<std::vector<double>> features_for(const Dataset& d,
                                                const std::vector<std::string>& panel);

std::optional<double> label_for(const Dataset& d, const std::string& trait);

struct SynthParams {
  int snp_count = 40;
  // Fixed dosages at the feature panel sites, e.g. {"rs1",1},{"rs2",0}.
  std::vector<std::pair<std::string, int>> panel_dosages;
  std::map<std::string, double> traits;
  double target_het = 0.35;
};

// Deterministic synthetic dataset: panel sites keep their given dosages and
// filler sites are arranged so overall heterozygosity lands on target_het.
Dataset synth_dataset(Rng& rng, const SynthParams& p);

}  // namespace agora
