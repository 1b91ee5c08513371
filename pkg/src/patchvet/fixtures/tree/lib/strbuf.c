// SPDX-License-Identifier: GPL-2.0
/*
 * Bounded string buffers (trimmed test fixture)
 */
#include <linux/hex.h>
#include <linux/strbuf.h>

/*
 * struct strbuf - a fixed-size output buffer
 * @buf: storage, @size bytes
 * @len: bytes used so far, always < @size so a NUL fits
 */
struct strbuf {
	char *buf;
	size_t size;
	size_t len;
};

/* Bytes still available, keeping room for the terminating NUL. */
static inline size_t strbuf_room(const struct strbuf *sb)
{
	return sb->size - sb->len - 1;
}
