#pragma once

#include <stdexcept>
#include <string>

namespace respscreen {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define RESPSCREEN_DEFINE_ERROR(Name) \
  class Name : public Error {         \
   public:                            \
    using Error::Error;               \
  };

// audio_io
RESPSCREEN_DEFINE_ERROR(MalformedWav)
RESPSCREEN_DEFINE_ERROR(UnsupportedEncoding)
RESPSCREEN_DEFINE_ERROR(SilentSample)

// features
RESPSCREEN_DEFINE_ERROR(TooShort)
RESPSCREEN_DEFINE_ERROR(EmptySeries)

// embeddings
RESPSCREEN_DEFINE_ERROR(MalformedEmbeddingFile)
RESPSCREEN_DEFINE_ERROR(DimensionMismatch)

// dataset
RESPSCREEN_DEFINE_ERROR(SchemaError)
RESPSCREEN_DEFINE_ERROR(DuplicateSample)
RESPSCREEN_DEFINE_ERROR(EmptyCohort)
RESPSCREEN_DEFINE_ERROR(TooFewUsers)

// model
RESPSCREEN_DEFINE_ERROR(SingleClass)
RESPSCREEN_DEFINE_ERROR(NonFiniteFeature)
RESPSCREEN_DEFINE_ERROR(DegenerateData)
RESPSCREEN_DEFINE_ERROR(ModelFormatError)

// plumbing
RESPSCREEN_DEFINE_ERROR(IoError)
RESPSCREEN_DEFINE_ERROR(ConfigError)

#undef RESPSCREEN_DEFINE_ERROR

}  // namespace respscreen
