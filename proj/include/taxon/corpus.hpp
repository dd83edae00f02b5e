#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "taxon/company.hpp"
#include "taxon/taxonomy.hpp"

namespace taxon {

struct CorpusSpec {
  std::size_t n_industries = 12;
  std::size_t ps_min = 8;
  std::size_t ps_max = 15;
  std::size_t n_companies = 2000;
  // Share of industries reachable through the source mapping; companies of
  // those industries carry a mapped source triple, the rest carry none.
  double mapped_fraction = 0.75;
  // Probability that each content word of a company description is replaced
  // by a random word from the whole corpus vocabulary.
  double noise = 0.0;
  std::uint64_t seed = 7;

  void validate() const;
};

struct Corpus {
  IndustryTaxonomy industries;
  ProductServiceTaxonomy products;
  SourceMapping mapping;
  std::vector<CompanyRecord> companies;
};

// Each industry receives a private theme vocabulary and each product/service
// code a private word triple; no content word is shared between any two of
// them. A company description quotes seven consecutive theme words of its
// gold industry followed by the word triples of its one or two gold codes.
Corpus generate_corpus(const CorpusSpec& spec);

struct CorpusPaths {
  std::string industries;
  std::string products;
  std::string mapping;
  std::string companies;
};

CorpusPaths corpus_paths(const std::string& dir);
// Creates `dir` if needed and writes the four files.
CorpusPaths write_corpus(const Corpus& corpus, const std::string& dir);

}  // namespace taxon
