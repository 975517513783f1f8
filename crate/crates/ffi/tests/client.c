#include <stdio.h>
#include <stdlib.h>

#include "collide.h"

#define CHECK(expr)                                                        \
    do {                                                                   \
        if (!(expr)) {                                                     \
            const char *msg = collide_last_error();                        \
            fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__, #expr, \
                    msg ? msg : "no error");                               \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    CollideConfig *cfg = NULL;
    CHECK(collide_config_new(2, 1.0, 0.0996, &cfg) == COLLIDE_STATUS_OK);

    CollidePlan plan;
    CHECK(collide_plan_samples(cfg, 4.0, &plan) == COLLIDE_STATUS_OK);
    printf("plan %llu %llu %llu\n", (unsigned long long)plan.batch_size,
           (unsigned long long)plan.n_batches, (unsigned long long)plan.n_total);

    /* 136 symbols cycling over 16 values */
    uint64_t symbols[136];
    for (size_t i = 0; i < 136; i++) symbols[i] = collide_hash_token((const uint8_t *)&i, 1) % 16;

    CHECK(collide_config_set_batch_size(cfg, 17) == COLLIDE_STATUS_OK);
    CollideEstimate est;
    CHECK(collide_estimate_moment(cfg, symbols, 136, &est) == COLLIDE_STATUS_OK);
    CHECK(est.n_batches == 8 && est.p_hat >= 0.0 && est.p_hat <= 1.0);

    CollideStream *stream = NULL;
    CHECK(collide_stream_new(2, 17, 8, &stream) == COLLIDE_STATUS_OK);
    CHECK(collide_stream_push(stream, symbols, 100) == COLLIDE_STATUS_OK);
    CHECK(!collide_stream_is_complete(stream));
    CHECK(collide_stream_push(stream, symbols + 100, 36) == COLLIDE_STATUS_OK);
    CHECK(collide_stream_is_complete(stream));
    CollideEstimate streamed;
    CHECK(collide_stream_finish(stream, &streamed) == COLLIDE_STATUS_OK);
    CHECK(streamed.p_hat == est.p_hat);
    collide_stream_free(stream);

    CHECK(collide_estimate_moment(cfg, symbols, 3, &est) == COLLIDE_STATUS_INSUFFICIENT_DATA);
    CHECK(collide_last_error() != NULL);
    collide_config_free(cfg);

    uint64_t c = 0;
    uint64_t batch[] = {4, 4, 4, 4};
    CHECK(collide_count_collisions_u64(batch, 4, 3, &c) == COLLIDE_STATUS_OK && c == 4);
    return 0;
}
