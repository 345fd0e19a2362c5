#ifndef ZBNN_VERSION_HPP
#define ZBNN_VERSION_HPP

namespace zbnn {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kReportSchemaVersion = 1;
inline constexpr unsigned kCheckpointVersion = 1;

}  // namespace zbnn

#endif  // ZBNN_VERSION_HPP
