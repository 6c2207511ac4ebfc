#pragma once

#include "fwforge/bytes.hpp"
#include "fwforge/campaign.hpp"
#include "fwforge/container.hpp"
#include "fwforge/crypto.hpp"
#include "fwforge/decryptor.hpp"
#include "fwforge/depres.hpp"
#include "fwforge/elf.hpp"
#include "fwforge/keystore.hpp"
#include "fwforge/packer.hpp"
