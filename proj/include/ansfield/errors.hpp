#pragma once

#include <stdexcept>
#include <string>

namespace ansfield {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define ANSFIELD_DEFINE_ERROR(Name)                                      \
    class Name : public Error {                                          \
    public:                                                              \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
    }

ANSFIELD_DEFINE_ERROR(InvalidArgument);
ANSFIELD_DEFINE_ERROR(PlacementExhausted);
ANSFIELD_DEFINE_ERROR(NoNavigableCell);
ANSFIELD_DEFINE_ERROR(UnknownObject);
ANSFIELD_DEFINE_ERROR(InsufficientObjects);
ANSFIELD_DEFINE_ERROR(MissingObservation);
ANSFIELD_DEFINE_ERROR(TransformMismatch);
ANSFIELD_DEFINE_ERROR(EmptyNavmask);
ANSFIELD_DEFINE_ERROR(ShapeMismatch);
ANSFIELD_DEFINE_ERROR(NonFiniteInput);
ANSFIELD_DEFINE_ERROR(MissingModel);
ANSFIELD_DEFINE_ERROR(EmptyInput);
ANSFIELD_DEFINE_ERROR(FormatError);

#undef ANSFIELD_DEFINE_ERROR

}  // namespace ansfield
