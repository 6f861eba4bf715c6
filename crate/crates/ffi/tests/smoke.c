#include <stdio.h>
#include <string.h>

#include "mscr.h"

int main(void) {
    MscrCodec *c = NULL;
    if (mscr_codec_new(5, 3, 3, 2, 0, &c) != MSCR_STATUS_OK) {
        fprintf(stderr, "new: %s\n", mscr_last_error_message());
        return 1;
    }
    uint32_t data[6] = {1, 2, 3, 4, 5, 6};
    uint32_t shards[10];
    if (mscr_encode(c, data, 6, shards, 10) != MSCR_STATUS_OK) {
        fprintf(stderr, "encode: %s\n", mscr_last_error_message());
        return 1;
    }
    uint32_t nodes[3] = {3, 4, 5};
    uint32_t back[6];
    if (mscr_decode(c, nodes, 3, shards + 4, 2, back, 6) != MSCR_STATUS_OK ||
        memcmp(back, data, sizeof data) != 0) {
        fprintf(stderr, "decode: %s\n", mscr_last_error_message());
        return 1;
    }
    uint32_t failed[2] = {1, 2};
    uint32_t repaired[4];
    size_t downloads[2];
    if (mscr_repair(c, failed, 2, nodes, 3, shards + 4, 2, repaired, 4, downloads) != MSCR_STATUS_OK ||
        memcmp(repaired, shards, 4 * sizeof(uint32_t)) != 0 || downloads[0] != 4 || downloads[1] != 4) {
        fprintf(stderr, "repair: %s\n", mscr_last_error_message());
        return 1;
    }
    mscr_codec_free(c);
    puts("ok");
    return 0;
}
