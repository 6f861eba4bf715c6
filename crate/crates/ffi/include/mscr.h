#ifndef MSCR_H
#define MSCR_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum {
  MSCR_STATUS_OK = 0,
  MSCR_STATUS_NULL_POINTER = 1,
  MSCR_STATUS_INVALID_PARAMS = 2,
  MSCR_STATUS_INVALID_ARGUMENT = 3,
  MSCR_STATUS_NOT_ENOUGH_SHARDS = 4,
  MSCR_STATUS_INCONSISTENT = 5,
  MSCR_STATUS_REPAIR_FAILED = 6,
  MSCR_STATUS_BUFFER_TOO_SMALL = 7,
  MSCR_STATUS_INTERNAL = 8,
} MscrStatus;

/**
 * Opaque codec handle.
 */
typedef struct MscrCodec MscrCodec;

/**
 * Creates a codec for `(n, k, d, t)`. `modulus = 0` picks the smallest
 * admissible prime.
 *
 * # Safety
 * `out` must be valid for one pointer write.
 */
MscrStatus mscr_codec_new(size_t n,
                          size_t k,
                          size_t d,
                          size_t t,
                          uint32_t modulus,
                          MscrCodec **out);

/**
 * # Safety
 * `codec` must come from [`mscr_codec_new`] and not be used afterwards.
 * Null is ignored.
 */
void mscr_codec_free(MscrCodec *codec);

/**
 * Symbols per node per stripe; 0 for a null handle.
 *
 * # Safety
 * `codec` must be null or a live handle.
 */
size_t mscr_codec_alpha(const MscrCodec *codec);

/**
 * Message symbols per stripe; 0 for a null handle.
 *
 * # Safety
 * `codec` must be null or a live handle.
 */
size_t mscr_codec_message_len(const MscrCodec *codec);

/**
 * Field modulus; 0 for a null handle.
 *
 * # Safety
 * `codec` must be null or a live handle.
 */
uint32_t mscr_codec_modulus(const MscrCodec *codec);

/**
 * Symbols each newcomer downloads per stripe during repair; 0 for a null
 * handle.
 *
 * # Safety
 * `codec` must be null or a live handle.
 */
size_t mscr_codec_repair_bandwidth(const MscrCodec *codec);

/**
 * Encodes `data_len` symbols (a multiple of the message length) into `n`
 * node-major shards written to `shards_out`, which must hold
 * `n * (data_len / B) * alpha` symbols.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
MscrStatus mscr_encode(const MscrCodec *codec,
                       const uint32_t *data,
                       size_t data_len,
                       uint32_t *shards_out,
                       size_t shards_out_len);

/**
 * Decodes from `count >= k` shards. `indices[q]` names the node whose
 * `shard_len` symbols start at `shards + q * shard_len`. `out` must hold
 * `(shard_len / alpha) * B` symbols.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
MscrStatus mscr_decode(const MscrCodec *codec,
                       const uint32_t *indices,
                       size_t count,
                       const uint32_t *shards,
                       size_t shard_len,
                       uint32_t *out,
                       size_t out_len);

/**
 * Regenerates the `t` nodes in `failed` from the surviving shards. Each
 * newcomer uses the `d` lowest-indexed nodes among `survivors`. `out` gets
 * the repaired shards in ascending node order, `t * shard_len` symbols.
 * If `downloads` is non-null it receives each newcomer's total download in
 * symbols, in the same order.
 *
 * # Safety
 * Pointers must be valid for the stated lengths; `downloads`, when
 * non-null, for `failed_count` writes.
 */
MscrStatus mscr_repair(const MscrCodec *codec,
                       const uint32_t *failed,
                       size_t failed_count,
                       const uint32_t *survivors,
                       size_t survivor_count,
                       const uint32_t *survivor_shards,
                       size_t shard_len,
                       uint32_t *out,
                       size_t out_len,
                       size_t *downloads);

/**
 * Message for the last failed call on this thread, empty after a success.
 * Valid until the next call on the same thread.
 */
const char *mscr_last_error_message(void);

/**
 * Static name of a status code.
 */
const char *mscr_status_name(MscrStatus status);

#endif  /* MSCR_H */
