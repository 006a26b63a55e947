#pragma once

#include <stdexcept>
#include <string>

namespace rfsearch {

/// Base of every error the library raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define RFSEARCH_DEFINE_ERROR(Name)            \
    class Name : public Error {                \
    public:                                    \
        using Error::Error;                    \
    }

// search tree
RFSEARCH_DEFINE_ERROR(EmptyTree);
RFSEARCH_DEFINE_ERROR(EliteEmpty);
// expansion
RFSEARCH_DEFINE_ERROR(ZeroActions);
RFSEARCH_DEFINE_ERROR(MissingFeedback);
RFSEARCH_DEFINE_ERROR(TemplateError);
// designer
RFSEARCH_DEFINE_ERROR(TransportError);
RFSEARCH_DEFINE_ERROR(ParseError);
RFSEARCH_DEFINE_ERROR(RetryExhausted);
// evaluation
RFSEARCH_DEFINE_ERROR(DimensionMismatch);
RFSEARCH_DEFINE_ERROR(MissingBinding);
// orchestration
RFSEARCH_DEFINE_ERROR(AllInitFailed);
RFSEARCH_DEFINE_ERROR(ConfigError);
// persistence
RFSEARCH_DEFINE_ERROR(IoError);
RFSEARCH_DEFINE_ERROR(VersionMismatch);
RFSEARCH_DEFINE_ERROR(CorruptCheckpoint);

#undef RFSEARCH_DEFINE_ERROR

}  // namespace rfsearch
