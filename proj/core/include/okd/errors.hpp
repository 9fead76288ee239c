#pragma once

#include <stdexcept>
#include <string>

namespace okd {

// Base for every error raised by the library. Subclasses exist so callers
// (and tests) can tell failure kinds apart without parsing messages.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define OKD_DECLARE_ERROR(Name)        \
  class Name : public Error {          \
   public:                             \
    using Error::Error;                \
  }

OKD_DECLARE_ERROR(RangeError);
OKD_DECLARE_ERROR(PlacementInfeasibleError);
OKD_DECLARE_ERROR(RenderFromCollisionError);
OKD_DECLARE_ERROR(PolicyFaultError);
OKD_DECLARE_ERROR(ShapeError);
OKD_DECLARE_ERROR(NonFiniteError);
OKD_DECLARE_ERROR(ZeroNormError);
OKD_DECLARE_ERROR(BatchTooSmallError);
OKD_DECLARE_ERROR(SequenceLengthError);
OKD_DECLARE_ERROR(SpacingInfeasibleError);
OKD_DECLARE_ERROR(ConfigError);
OKD_DECLARE_ERROR(ModalityError);
OKD_DECLARE_ERROR(IoError);
OKD_DECLARE_ERROR(FormatError);

#undef OKD_DECLARE_ERROR

class UnknownKeyError : public ConfigError {
 public:
  UnknownKeyError(const std::string& key, const std::string& suggestion)
      : ConfigError("unknown config key '" + key + "'" +
                    (suggestion.empty() ? std::string()
                                        : " (did you mean '" + suggestion + "'?)")),
        key_(key),
        suggestion_(suggestion) {}
  const std::string& key() const { return key_; }
  const std::string& suggestion() const { return suggestion_; }

 private:
  std::string key_;
  std::string suggestion_;
};

class MissingPrerequisiteError : public Error {
 public:
  MissingPrerequisiteError(const std::string& artifact, const std::string& producer)
      : Error("missing prerequisite '" + artifact + "'; run '" + producer + "' first"),
        artifact_(artifact),
        producer_(producer) {}
  const std::string& artifact() const { return artifact_; }
  const std::string& producer() const { return producer_; }

 private:
  std::string artifact_;
  std::string producer_;
};

}  // namespace okd
