#pragma once

namespace densemap {

enum class LogLevel { kDebug, kInfo, kWarn, kError, kOff };

/// Verbosity of the library's diagnostic log (stderr). Default is info.
void set_log_level(LogLevel level);

}  // namespace densemap
