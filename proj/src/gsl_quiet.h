#pragma once

#include <gsl/gsl_errno.h>

namespace fmmbeat::detail {

// GSL aborts by default; failures surface through return codes instead.
inline void silence_gsl_errors() {
    static const bool done = [] {
        gsl_set_error_handler_off();
        return true;
    }();
    (void)done;
}

}  // namespace fmmbeat::detail
