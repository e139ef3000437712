#ifndef SENSEMASK_ERROR_HPP
#define SENSEMASK_ERROR_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace sensemask {

/// Base of every error the library throws. `kind()` is a stable, greppable
/// class name used by the CLI on stderr.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    virtual const char* kind() const noexcept { return "Error"; }
};

#define SENSEMASK_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                        \
    public:                                                            \
        explicit Name(const std::string& what) : Error(what) {}        \
        const char* kind() const noexcept override { return #Name; }   \
    }

SENSEMASK_DEFINE_ERROR(LengthMismatch);
SENSEMASK_DEFINE_ERROR(ShapeMismatch);
SENSEMASK_DEFINE_ERROR(FormatError);
SENSEMASK_DEFINE_ERROR(VersionError);
SENSEMASK_DEFINE_ERROR(BadRatio);
SENSEMASK_DEFINE_ERROR(NoValidTriplet);
SENSEMASK_DEFINE_ERROR(NoValidPair);
SENSEMASK_DEFINE_ERROR(EmptyData);
SENSEMASK_DEFINE_ERROR(BadSpec);
SENSEMASK_DEFINE_ERROR(TooFewLayers);
SENSEMASK_DEFINE_ERROR(ConfigError);
SENSEMASK_DEFINE_ERROR(NonFiniteError);
SENSEMASK_DEFINE_ERROR(IoError);

#undef SENSEMASK_DEFINE_ERROR

/// A cosine was requested on a vector of zero norm. Usually means every
/// selected dimension of an embedding (or of one layer) is zero.
class ZeroNormError : public Error {
public:
    explicit ZeroNormError(const std::string& what) : Error(what) {}
    ZeroNormError(const std::string& what, std::optional<std::uint64_t> occurrence,
                  std::optional<int> layer)
        : Error(what), occurrence_(occurrence), layer_(layer) {}

    const char* kind() const noexcept override { return "ZeroNormError"; }
    std::optional<std::uint64_t> occurrence() const { return occurrence_; }
    std::optional<int> layer() const { return layer_; }

private:
    std::optional<std::uint64_t> occurrence_;
    std::optional<int> layer_;
};

}  // namespace sensemask

#endif  // SENSEMASK_ERROR_HPP
