#pragma once

// Single include point for cpp-httplib so every translation unit agrees on
// its configuration macros.
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "httplib.h"
