/**
 * @file error.hpp
 * @brief Exception types shared by the planner, engine and tools.
 */

#ifndef MEMPLAN_ERROR_HPP_
#define MEMPLAN_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace memplan {
    class Error : public std::runtime_error {
    public:
        using std::runtime_error::runtime_error;
    };

#define MEMPLAN_DEFINE_ERROR(name)                  \
    class name : public Error {                     \
    public:                                         \
        using Error::Error;                         \
    }

    /* Bytecode encoding and program files. */
    MEMPLAN_DEFINE_ERROR(MalformedInstruction);
    MEMPLAN_DEFINE_ERROR(FormatError);
    MEMPLAN_DEFINE_ERROR(TruncatedProgram);
    MEMPLAN_DEFINE_ERROR(IoError);

    /* Planning. */
    MEMPLAN_DEFINE_ERROR(BuilderError);
    MEMPLAN_DEFINE_ERROR(AllocatorError);
    MEMPLAN_DEFINE_ERROR(InfeasiblePlan);
    MEMPLAN_DEFINE_ERROR(ConfigError);
    MEMPLAN_DEFINE_ERROR(SpecError);

    /* Execution. */
    MEMPLAN_DEFINE_ERROR(CorruptProgram);
    MEMPLAN_DEFINE_ERROR(InputError);
    MEMPLAN_DEFINE_ERROR(ProtocolError);
    MEMPLAN_DEFINE_ERROR(IncompatibilityError);

#undef MEMPLAN_DEFINE_ERROR
}

#endif
