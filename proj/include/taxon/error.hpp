#pragma once

#include <stdexcept>
#include <string>

namespace taxon {

// Broad failure categories. The CLI maps each one onto a distinct exit code.
enum class ErrorCategory {
  kInput,          // malformed or inconsistent input data
  kCompatibility,  // model version / provider fingerprint mismatch
  kRemote,         // remote embedding provider failure
  kNumeric,        // training diverged
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

#define TAXON_DEFINE_ERROR(Name, Category)                     \
  class Name : public Error {                                  \
   public:                                                     \
    explicit Name(const std::string& what)                     \
        : Error(ErrorCategory::Category, #Name ": " + what) {} \
  }

TAXON_DEFINE_ERROR(MissingFile, kInput);
TAXON_DEFINE_ERROR(ParseError, kInput);
TAXON_DEFINE_ERROR(DuplicateId, kInput);
TAXON_DEFINE_ERROR(EmptyDescription, kInput);
TAXON_DEFINE_ERROR(OrphanCode, kInput);
TAXON_DEFINE_ERROR(EmptyTaxonomy, kInput);
TAXON_DEFINE_ERROR(UnknownTarget, kInput);
TAXON_DEFINE_ERROR(UnknownIndustry, kInput);
TAXON_DEFINE_ERROR(DimensionMismatch, kInput);
TAXON_DEFINE_ERROR(EmptyDataset, kInput);
TAXON_DEFINE_ERROR(MissingGold, kInput);
TAXON_DEFINE_ERROR(CorruptFile, kInput);
TAXON_DEFINE_ERROR(InvalidArgument, kInput);

TAXON_DEFINE_ERROR(VersionMismatch, kCompatibility);
TAXON_DEFINE_ERROR(FingerprintMismatch, kCompatibility);

TAXON_DEFINE_ERROR(RemoteUnavailable, kRemote);
TAXON_DEFINE_ERROR(MalformedResponse, kRemote);

TAXON_DEFINE_ERROR(NonFiniteLoss, kNumeric);

#undef TAXON_DEFINE_ERROR

}  // namespace taxon
