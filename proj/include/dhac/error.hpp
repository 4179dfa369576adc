#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace dhac {

using NodeId = std::int64_t;

// Base of every error the library throws. `code` is a short machine-readable
// tag ("arity", "cycle", "div-by-zero", ...); `node` names the offending node
// when there is one.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message, std::optional<NodeId> node = std::nullopt)
        : std::runtime_error(message), code_(std::move(code)), node_(node) {}

    const std::string& code() const noexcept { return code_; }
    std::optional<NodeId> node() const noexcept { return node_; }

private:
    std::string code_;
    std::optional<NodeId> node_;
};

#define DHAC_ERROR_TYPE(Name)                       \
    class Name : public Error {                     \
    public:                                         \
        using Error::Error;                         \
    };

DHAC_ERROR_TYPE(ParseError)
DHAC_ERROR_TYPE(ValidationError)
DHAC_ERROR_TYPE(InputError)
DHAC_ERROR_TYPE(EvalError)
DHAC_ERROR_TYPE(BuiltinError)
DHAC_ERROR_TYPE(StatsError)
DHAC_ERROR_TYPE(ModulusError)
DHAC_ERROR_TYPE(NoInverseError)
DHAC_ERROR_TYPE(ConfigError)
DHAC_ERROR_TYPE(SiteError)
DHAC_ERROR_TYPE(TraceError)

#undef DHAC_ERROR_TYPE

}  // namespace dhac
