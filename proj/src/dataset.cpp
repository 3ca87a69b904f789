#include "agora/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace agora {

std::string canonical_text(const Dataset& d) {
  std::string out = "dataset " + std::to_string(d.genotype.size()) + " " +
                    std::to_string(d.phenotype.size()) + "\n";
  for (const auto& [rsid, dosage] : d.genotype)
    out += rsid + "\t" + std::to_string(dosage) + "\n";
  for (const auto& [trait, value] : d.phenotype)
    out += trait + "\t" + format_double(value) + "\n";
  return out;
}

crypto::Digest fingerprint(const Dataset& d) { return crypto::digest(canonical_text(d)); }

namespace {

bool fail(std::string* err, const std::string& msg) {
  if (err) *err = msg;
  return false;
}

bool split_tab(const std::string& line, std::string& a, std::string& b) {
  auto pos = line.find('\t');
  if (pos == std::string::npos || pos == 0 || pos + 1 >= line.size()) return false;
  a = line.substr(0, pos);
  b = line.substr(pos + 1);
  return true;
}

}  // namespace

std::optional<Dataset> parse_dataset(std::string_view text, std::string* err) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) {
    fail(err, "empty input");
    return std::nullopt;
  }
  std::istringstream header(line);
  std::string tag;
  std::size_t n_snps = 0, n_traits = 0;
  if (!(header >> tag >> n_snps >> n_traits) || tag != "dataset") {
    fail(err, "bad header line");
    return std::nullopt;
  }

  Dataset d;
  for (std::size_t i = 0; i < n_snps; ++i) {
    if (!std::getline(in, line)) {
      fail(err, "missing SNP line " + std::to_string(i + 1));
      return std::nullopt;
    }
    std::string rsid, dosage_text;
    if (!split_tab(line, rsid, dosage_text)) {
      fail(err, "malformed SNP line " + std::to_string(i + 2));
      return std::nullopt;
    }
    if (dosage_text != "0" && dosage_text != "1" && dosage_text != "2") {
      fail(err, "dosage out of range on line " + std::to_string(i + 2));
      return std::nullopt;
    }
    if (!d.genotype.emplace(rsid, dosage_text[0] - '0').second) {
      fail(err, "duplicate rsid " + rsid);
      return std::nullopt;
    }
  }
  for (std::size_t i = 0; i < n_traits; ++i) {
    if (!std::getline(in, line)) {
      fail(err, "missing trait line " + std::to_string(i + 1));
      return std::nullopt;
    }
    std::string trait, value_text;
    if (!split_tab(line, trait, value_text)) {
      fail(err, "malformed trait line " + std::to_string(n_snps + i + 2));
      return std::nullopt;
    }
    double value = 0;
    if (!parse_double(value_text, value)) {
      fail(err, "bad trait value on line " + std::to_string(n_snps + i + 2));
      return std::nullopt;
    }
    if (!d.phenotype.emplace(trait, value).second) {
      fail(err, "duplicate trait " + trait);
      return std::nullopt;
    }
  }
  if (std::getline(in, line) && !line.empty()) {
    fail(err, "trailing content after declared lines");
    return std::nullopt;
  }
  return d;
}

double heterozygosity(const Dataset& d) {
  if (d.genotype.empty()) return 0.0;
  std::size_t het = 0;
  for (const auto& [rsid, dosage] : d.genotype)
    if (dosage == 1) ++het;
  return static_cast<double>(het) / static_cast<double>(d.genotype.size());
}

std::optional<std::vector<double>> features_for(const Dataset& d,
                                                const std::vector<std::string>& panel) {
  std::vector<double> out;
  out.reserve(panel.size());
  for (const auto& rsid : panel) {
    auto it = d.genotype.find(rsid);
    if (it == d.genotype.end()) return std::nullopt;
    out.push_back(static_cast<double>(it->second));
  }
  return out;
}

std::optional<double> label_for(const Dataset& d, const std::string& trait) {
  auto it = d.phenotype.find(trait);
  if (it == d.phenotype.end()) return std::nullopt;
  return it->second;
}

Dataset synth_dataset(Rng& rng, const SynthParams& p) {
  Dataset d;
  int panel_hets = 0;
  for (const auto& [rsid, dosage] : p.panel_dosages) {
    d.genotype[rsid] = dosage;
    if (dosage == 1) ++panel_hets;
  }

  int filler = p.snp_count - static_cast<int>(d.genotype.size());
  if (filler < 0) filler = 0;
  int want_het = static_cast<int>(std::lround(p.target_het * p.snp_count)) - panel_hets;
  want_het = std::clamp(want_het, 0, filler);

  std::vector<int> dosages;
  dosages.reserve(filler);
  for (int i = 0; i < want_het; ++i) dosages.push_back(1);
  for (int i = want_het; i < filler; ++i) dosages.push_back(rng.below(2) == 0 ? 0 : 2);
  rng.shuffle(dosages);

  int next_id = 1000;
  for (int dosage : dosages) {
    std::string rsid;
    do {
      rsid = "rs" + std::to_string(next_id++);
    } while (d.genotype.count(rsid));
    d.genotype[rsid] = dosage;
  }

  d.phenotype = p.traits;
  return d;
}

}  // namespace agora
