#pragma once

#define RECDUAL_VERSION_MAJOR 1
#define RECDUAL_VERSION_MINOR 0
#define RECDUAL_VERSION_PATCH 0
#define RECDUAL_VERSION_STRING "1.0.0"
