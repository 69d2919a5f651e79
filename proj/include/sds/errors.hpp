#pragma once

#include <stdexcept>
#include <string>

namespace sds {

// Every domain error carries the module that raised it; the CLI prints it.
class Error : public std::runtime_error {
public:
    Error(std::string module, std::string kind, const std::string& what)
        : std::runtime_error(what), module_(std::move(module)), kind_(std::move(kind)) {}
    const std::string& module() const noexcept { return module_; }
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string module_;
    std::string kind_;
};

#define SDS_DEFINE_ERROR(Name)                                                    \
    class Name : public Error {                                                   \
    public:                                                                       \
        Name(const std::string& module, const std::string& what)                  \
            : Error(module, #Name, what) {}                                       \
    };

SDS_DEFINE_ERROR(NonSubextremal)
SDS_DEFINE_ERROR(OutsideExpandingRegion)
SDS_DEFINE_ERROR(BandMismatch)
SDS_DEFINE_ERROR(StepSizeUnderflow)
SDS_DEFINE_ERROR(IllConditionedFit)
SDS_DEFINE_ERROR(NonConvergent)
SDS_DEFINE_ERROR(SingularMatch)
SDS_DEFINE_ERROR(MissingSecondDerivative)
SDS_DEFINE_ERROR(InvalidArgument)

#undef SDS_DEFINE_ERROR

}  // namespace sds
