// SPDX-License-Identifier: GPL-2.0-or-later
/*
 * zswap.c - compressed cache for swap pages (trimmed test fixture)
 */
#include <linux/mm_types.h>
#include <linux/percpu-defs.h>
#include <linux/mutex.h>

/*
 * Per-CPU compression context. The mutex serializes users of dstmem;
 * the context is torn down by zswap_cpu_comp_dead() when its CPU goes
 * offline.
 */
struct crypto_acomp_ctx {
	struct crypto_acomp *acomp;
	struct acomp_req *req;
	struct crypto_wait wait;
	u8 *dstmem;
	struct mutex *mutex;
};

struct zswap_pool {
	struct zpool *zpool;
	struct crypto_acomp_ctx __percpu *acomp_ctx;
	struct kref kref;
	struct hlist_node node;
	char tfm_name[CRYPTO_MAX_ALG_NAME];
};

static DEFINE_PER_CPU(u8 *, zswap_dstmem);

/* Tear down the compression context of an offlined CPU. */
static int zswap_cpu_comp_dead(unsigned int cpu, struct hlist_node *node)
{
	struct zswap_pool *pool = hlist_entry(node, struct zswap_pool, node);
	struct crypto_acomp_ctx *acomp_ctx = per_cpu_ptr(pool->acomp_ctx, cpu);

	if (!IS_ERR_OR_NULL(acomp_ctx)) {
		if (!IS_ERR_OR_NULL(acomp_ctx->req))
			acomp_request_free(acomp_ctx->req);
		if (!IS_ERR_OR_NULL(acomp_ctx->acomp))
			crypto_free_acomp(acomp_ctx->acomp);
	}
	return 0;
}

/*
 * zswap_frontswap_store - compress @page and keep it in the pool
 */
static int zswap_frontswap_store(unsigned type, pgoff_t offset,
				struct page *page)
{
	struct zswap_tree *tree = zswap_trees[type];
	struct zswap_entry *entry, *dupentry;
	struct crypto_comp *tfm;
	unsigned int dlen = PAGE_SIZE;
	u8 *src, *dst;
	int ret;

	entry = zswap_entry_cache_alloc(GFP_KERNEL);
	if (!entry)
		return -ENOMEM;
	entry->pool = zswap_pool_current_get();

	/* compress */
	dst = get_cpu_var(zswap_dstmem);
	tfm = *get_cpu_ptr(entry->pool->tfm);
	src = kmap_atomic(page);
	ret = crypto_comp_compress(tfm, src, PAGE_SIZE, dst, &dlen);
	kunmap_atomic(src);
	put_cpu_ptr(entry->pool->tfm);
	put_cpu_var(zswap_dstmem);
	return ret;
}
/* Called from the shrinker; frees up to @nr entries of @pool. */
static int zswap_shrink(struct zswap_pool *pool, int nr)
{
	int freed = 0;

	while (freed < nr && zswap_reclaim_entry(pool) == 0)
		freed++;
	return freed;
}
