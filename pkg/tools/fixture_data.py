"""Hand-authored content for the packaged fixtures: a small C tree, review
threads, patch proposals and the canned answers of the scripted model."""

import textwrap


def d(s):
    return textwrap.dedent(s).lstrip("\n")


# ---------------------------------------------------------------- source tree

ZSWAP_HEAD = d("""
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

""")

ZSWAP_STORE_OLD = d("""
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
""")

ZSWAP_STORE_NEW = d("""
    /*
     * zswap_frontswap_store - compress @page and keep it in the pool
     */
    static int zswap_frontswap_store(unsigned type, pgoff_t offset,
    				struct page *page)
    {
    	struct zswap_tree *tree = zswap_trees[type];
    	struct zswap_entry *entry, *dupentry;
    	struct crypto_acomp_ctx *acomp_ctx;
    	struct scatterlist input, output;
    	unsigned int dlen = PAGE_SIZE;
    	u8 *dst;
    	int ret;

    	entry = zswap_entry_cache_alloc(GFP_KERNEL);
    	if (!entry)
    		return -ENOMEM;
    	entry->pool = zswap_pool_current_get();

    	/* compress */
    	acomp_ctx = raw_cpu_ptr(entry->pool->acomp_ctx);

    	mutex_lock(acomp_ctx->mutex);

    	dst = acomp_ctx->dstmem;
    	sg_init_table(&input, 1);
    	sg_set_page(&input, page, PAGE_SIZE, 0);
    	sg_init_one(&output, dst, PAGE_SIZE * 2);
    	acomp_request_set_params(acomp_ctx->req, &input, &output, PAGE_SIZE, dlen);
    	ret = crypto_wait_req(crypto_acomp_compress(acomp_ctx->req), &acomp_ctx->wait);
    	dlen = acomp_ctx->req->dlen;

    	mutex_unlock(acomp_ctx->mutex);
    	return ret;
    }
""")

ZSWAP_STORE_FIXED = ZSWAP_STORE_NEW.replace(
    """	acomp_ctx = raw_cpu_ptr(entry->pool->acomp_ctx);

	mutex_lock(acomp_ctx->mutex);
""",
    """	for (;;) {
		acomp_ctx = raw_cpu_ptr(entry->pool->acomp_ctx);
		mutex_lock(acomp_ctx->mutex);
		/* the CPU may have gone offline since we sampled the pointer */
		if (likely(acomp_ctx->req))
			break;
		mutex_unlock(acomp_ctx->mutex);
	}
""",
)

ZSWAP_DEAD_FIXED = """\
	if (!IS_ERR_OR_NULL(acomp_ctx)) {
		mutex_lock(acomp_ctx->mutex);
		if (!IS_ERR_OR_NULL(acomp_ctx->req))
			acomp_request_free(acomp_ctx->req);
		acomp_ctx->req = NULL;
		if (!IS_ERR_OR_NULL(acomp_ctx->acomp))
			crypto_free_acomp(acomp_ctx->acomp);
		mutex_unlock(acomp_ctx->mutex);
	}
"""
ZSWAP_DEAD_OLD = """\
	if (!IS_ERR_OR_NULL(acomp_ctx)) {
		if (!IS_ERR_OR_NULL(acomp_ctx->req))
			acomp_request_free(acomp_ctx->req);
		if (!IS_ERR_OR_NULL(acomp_ctx->acomp))
			crypto_free_acomp(acomp_ctx->acomp);
	}
"""

ZSWAP_SHRINK_OLD = d("""

    /* Called from the shrinker; frees up to @nr entries of @pool. */
    static int zswap_shrink(struct zswap_pool *pool, int nr)
    {
    	int freed = 0;

    	while (freed < nr && zswap_reclaim_entry(pool) == 0)
    		freed++;
    	return freed;
    }
""")
ZSWAP_SHRINK_NEW = ZSWAP_SHRINK_OLD.replace(
    "	while (freed < nr && zswap_reclaim_entry(pool) == 0)\n",
    "	if (!kref_get_unless_zero(&pool->kref))\n		return 0;\n	while (freed < nr && zswap_reclaim_entry(pool) == 0)\n",
).replace("	return freed;\n", "	zswap_pool_put(pool);\n	return freed;\n")

ZSWAP_TREE = ZSWAP_HEAD + ZSWAP_STORE_OLD + ZSWAP_SHRINK_OLD
ZSWAP_BUGGY = ZSWAP_HEAD + ZSWAP_STORE_NEW + ZSWAP_SHRINK_OLD
ZSWAP_FIXED = (ZSWAP_HEAD + ZSWAP_STORE_FIXED + ZSWAP_SHRINK_OLD).replace(ZSWAP_DEAD_OLD, ZSWAP_DEAD_FIXED)
ZSWAP_GATE = ZSWAP_HEAD + ZSWAP_STORE_OLD + ZSWAP_SHRINK_NEW

MM_TYPES_H = d("""
    /* SPDX-License-Identifier: GPL-2.0 */
    #ifndef _LINUX_MM_TYPES_H
    #define _LINUX_MM_TYPES_H

    /*
     * Each physical page in the system has a struct page associated with
     * it to keep track of whatever it is we are using the page for at the
     * moment.
     */
    struct page {
    	unsigned long flags;		/* Atomic flags, some possibly
    					 * updated asynchronously */
    	union {
    		struct list_head lru;
    		struct rcu_head rcu_head;
    	};
    	atomic_t _refcount;
    };

    #endif /* _LINUX_MM_TYPES_H */
""")

PERCPU_DEFS_H = d("""
    /* SPDX-License-Identifier: GPL-2.0 */
    #ifndef _LINUX_PERCPU_DEFS_H
    #define _LINUX_PERCPU_DEFS_H

    /*
     * raw_cpu_ptr() gives no protection against preemption: the caller
     * must make sure the task cannot migrate while the pointer is used.
     */
    #define raw_cpu_ptr(ptr)						\\
    ({									\\
    	__verify_pcpu_ptr(ptr);						\\
    	arch_raw_cpu_ptr(ptr);						\\
    })

    /* Like raw_cpu_ptr(), but warns when called with preemption enabled. */
    #define this_cpu_ptr(ptr) raw_cpu_ptr(ptr)

    #endif /* _LINUX_PERCPU_DEFS_H */
""")

DAMON_HEAD = d("""
    // SPDX-License-Identifier: GPL-2.0
    /*
     * Data access monitor core (trimmed test fixture)
     */
    #include <linux/damon.h>
    #include <linux/slab.h>

    /* Allocate a region covering [@start, @end). */
    struct damon_region *damon_new_region(unsigned long start, unsigned long end)
    {
    	struct damon_region *region;

    	region = kmem_cache_alloc(damon_region_cache, GFP_KERNEL);
    	if (!region)
    		return NULL;
    	region->ar.start = start;
    	region->ar.end = end;
    	INIT_LIST_HEAD(&region->list);
    	return region;
    }

    void damon_destroy_region(struct damon_region *r, struct damon_target *t)
    {
    	list_del(&r->list);
    	t->nr_regions--;
    	kmem_cache_free(damon_region_cache, r);
    }
""")

DAMON_SPLIT_BUGGY = d("""

    /*
     * Split every region of @t into @nr_subs pieces of the same size.
     */
    static int damon_split_regions_of(struct damon_target *t, int nr_subs)
    {
    	struct damon_region *r, *next;
    	struct damon_region **pieces;
    	unsigned long sz;
    	int i;

    	pieces = kmalloc_array(nr_subs, sizeof(*pieces), GFP_KERNEL);
    	if (!pieces)
    		return -ENOMEM;
    	damon_for_each_region_safe(r, next, t) {
    		sz = (r->ar.end - r->ar.start) / nr_subs;
    		for (i = 0; i < nr_subs - 1; i++) {
    			pieces[i] = damon_new_region(r->ar.start + sz * (i + 1),
    						     r->ar.start + sz * (i + 2));
    			if (!pieces[i])
    				return -ENOMEM;
    		}
    		damon_insert_pieces(t, r, pieces, nr_subs - 1);
    	}
    	kfree(pieces);
    	return 0;
    }
""")

DAMON_SPLIT_FIXED = DAMON_SPLIT_BUGGY.replace(
    """			if (!pieces[i])
				return -ENOMEM;
""",
    """			if (!pieces[i])
				goto free_pieces;
""",
).replace(
    """	kfree(pieces);
	return 0;
}
""",
    """	kfree(pieces);
	return 0;

free_pieces:
	while (--i >= 0)
		kmem_cache_free(damon_region_cache, pieces[i]);
	kfree(pieces);
	return -ENOMEM;
}
""",
)

DAMON_TREE = DAMON_HEAD
DAMON_BUGGY = DAMON_HEAD + DAMON_SPLIT_BUGGY
DAMON_FIXED = DAMON_HEAD + DAMON_SPLIT_FIXED

STRBUF_HEAD = d("""
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
""")

STRBUF_HEX_BUGGY = d("""

    /* Append @len bytes of @data as lowercase hex digits. */
    int strbuf_append_hex(struct strbuf *sb, const u8 *data, size_t len)
    {
    	size_t i;

    	for (i = 0; i < len; i++) {
    		sb->buf[sb->len++] = hex_asc_hi(data[i]);
    		sb->buf[sb->len++] = hex_asc_lo(data[i]);
    	}
    	sb->buf[sb->len] = '\\0';
    	return 0;
    }
""")

STRBUF_HEX_FIXED = STRBUF_HEX_BUGGY.replace(
    """	size_t i;

""",
    """	size_t i;

	if (len > strbuf_room(sb) / 2)
		return -EOVERFLOW;
""",
)

STRBUF_TREE = STRBUF_HEAD
STRBUF_BUGGY = STRBUF_HEAD + STRBUF_HEX_BUGGY
STRBUF_FIXED = STRBUF_HEAD + STRBUF_HEX_FIXED

TREE = {
    "mm/zswap.c": ZSWAP_TREE,
    "mm/damon/core.c": DAMON_TREE,
    "lib/strbuf.c": STRBUF_TREE,
    "include/linux/mm_types.h": MM_TYPES_H,
    "include/linux/percpu-defs.h": PERCPU_DEFS_H,
}

# ---------------------------------------------------------------- people

ALICE = "Alice Maintainer <alice@kernel.example>"
BOB = "Bob Reviewer <bob@example.org>"
CAROL = "Carol Dev <carol@example.com>"
DAN = "Dan Hacker <dan@example.net>"
ERIN = "Erin Tester <erin@example.org>"
FRANK = "Frank Lee <frank@example.com>"
PAT = "Pat Submitter <pat@example.com>"
SAM = "Sam Porter <sam@example.com>"
YURI = "Yuri Adams <yuri@example.org>"
KIM = "Kim Novak <kim@example.net>"
LEE = "Lee Park <lee@example.com>"

# ---------------------------------------------------------------- review threads
# Each thread: root (id, subject, author, date, body) and replies
# (id, author, date, body). Rules the scripted model extracts from the
# thread name the reply ids they come from.

SMALL_DIFF = d("""
    ---
     {path} | 2 +-
     1 file changed, 1 insertion(+), 1 deletion(-)

    diff --git a/{path} b/{path}
    --- a/{path}
    +++ b/{path}
    @@ -10,3 +10,3 @@ {heading}
     	{ctx}
    -	{old}
    +	{new}
     	return 0;
""")


def small_patch(summary, path, heading, ctx, old, new, author):
    return (
        f"{summary}\n\nSigned-off-by: {author}\n"
        + SMALL_DIFF.format(path=path, heading=heading, ctx=ctx, old=old, new=new)
    )


THREADS = [
    {
        "root": ("20230105101500.1001-1-pat@example.com", "[PATCH] mm/zswap: check pool refcount before reuse", PAT,
                 "2023-01-05T10:15:00+00:00",
                 small_patch("Skip pools that are being released.", "mm/zswap.c", "static struct zswap_pool *zswap_pool_find_get(char *type)",
                             "struct zswap_pool *pool;", "if (zswap_pool_get(pool))", "if (kref_read(&pool->kref) && zswap_pool_get(pool))", PAT)),
        "replies": [
            ("a1b2c3d4-1@kernel.example", ALICE, "2023-01-05T14:02:00+00:00",
             "> +	if (kref_read(&pool->kref) && zswap_pool_get(pool))\n\n"
             "You read the refcount outside zswap_pools_lock and only then take the\n"
             "reference. By the time the lock is held the pool can be gone and the\n"
             "memory handed to something else, so the unlocked read proves nothing.\n"
             "Do the check again once you hold the lock.\n"),
            ("b0b-77@example.org", BOB, "2023-01-06T08:30:00+00:00",
             "Also please use the allocator to allocate memory here.\n"),
        ],
        "rules": [
            ("Re-check any state that was tested without a lock once the lock is held, before acting on it; "
             "an object found by address may be freed and reused between the unlocked check and the action.",
             ["a1b2c3d4-1@kernel.example"]),
            ("Use the allocator to allocate memory.", ["b0b-77@example.org"]),
        ],
    },
    {
        "root": ("20230210093000.2002-1-carol@example.com", "[PATCH] mm/percpu: cache the per-cpu batch pointer", CAROL,
                 "2023-02-10T09:30:00+00:00",
                 small_patch("Avoid recomputing the batch pointer.", "mm/percpu.c", "static void pcpu_refill(struct pcpu_batch *b)",
                             "struct pcpu_batch *b;", "b = per_cpu_ptr(&batches, smp_processor_id());", "b = this_cpu_ptr(&batches);", CAROL)),
        "replies": [
            ("a1b2c3d4-2@kernel.example", ALICE, "2023-02-10T11:45:00+00:00",
             "this_cpu_ptr() is called here with preemption enabled. The task can\n"
             "be migrated right after it and keep writing into another CPU's batch.\n"
             "Either keep preemption disabled for as long as you use the pointer or\n"
             "protect the data with a lock that does not depend on the current CPU.\n"),
            ("erin-3@example.org", ERIN, "2023-02-11T16:20:00+00:00",
             "Agreed, the pointer is only good while we cannot migrate. Please fix\n"
             "this in the next version.\n"),
        ],
        "rules": [
            ("A pointer returned by raw_cpu_ptr() or this_cpu_ptr() refers to the current CPU's data only while "
             "the task cannot migrate; keep preemption or migration disabled, or hold a lock tied to that data, "
             "for every use of the pointer.",
             ["a1b2c3d4-2@kernel.example", "erin-3@example.org"]),
            ("Fix this in the next version.", ["erin-3@example.org"]),
        ],
    },
    {
        "root": ("20230302120000.3003-1-frank@example.com", "[PATCH v2] mm/vmscan: tidy up shrink_list comments", FRANK,
                 "2023-03-02T12:00:00+00:00",
                 small_patch("Comment fixes only.", "mm/vmscan.c", "static unsigned long shrink_list(enum lru_list lru)",
                             "unsigned long nr;", "/* shrink teh list */", "/* shrink the list */", FRANK)),
        "replies": [
            ("a1b2c3d4-3@kernel.example", ALICE, "2023-03-03T07:10:00+00:00",
             "Thanks. For future postings keep the 'mm/<file>:' subject prefix; v1\n"
             "used a bare 'vmscan:' and did not reach the right people.\n"),
            ("b0b-78@example.org", BOB, "2023-03-03T09:00:00+00:00",
             "Please don't top-post on this list.\n"),
        ],
        "rules": [
            ("Memory-management patch subjects use the 'mm/<file>:' prefix so they reach the right maintainer.",
             ["a1b2c3d4-3@kernel.example"]),
            ("Do not top-post when replying on the mailing list.", ["b0b-78@example.org"]),
        ],
    },
    {
        "root": ("20230418081500.4004-1-pat@example.com", "[PATCH] mm/zswap: free per-cpu acomp buffers on CPU offline", PAT,
                 "2023-04-18T08:15:00+00:00",
                 small_patch("Release dstmem when a CPU goes away.", "mm/zswap.c", "static int zswap_dstmem_dead(unsigned int cpu)",
                             "u8 *dst = per_cpu(zswap_dstmem, cpu);", "per_cpu(zswap_dstmem, cpu) = NULL;", "kfree(dst); per_cpu(zswap_dstmem, cpu) = NULL;", PAT)),
        "replies": [
            ("dan-41@example.net", DAN, "2023-04-18T19:40:00+00:00",
             "The dstmem can still be in use by a store that sampled the per-cpu\n"
             "pointer before the CPU went down. And the entry check you added runs\n"
             "before mutex_lock(), so it has to be redone after the lock is taken.\n"),
            ("a1b2c3d4-4@kernel.example", ALICE, "2023-04-19T06:05:00+00:00",
             "Right. Free the per-cpu buffers only once nobody can be using them.\n"),
        ],
        "rules": [
            ("Checks done before taking a lock must be repeated after the lock is acquired.", ["dan-41@example.net"]),
            ("In a CPU hotplug teardown callback, free per-CPU resources only after ensuring that no task can "
             "still be using them.",
             ["a1b2c3d4-4@kernel.example", "dan-41@example.net"]),
        ],
    },
    {
        "root": ("20230501101000.5005-1-carol@example.com", "[PATCH] mm/page_alloc: fix typo in comment", CAROL,
                 "2023-05-01T10:10:00+00:00",
                 small_patch("Typo.", "mm/page_alloc.c", "static void free_one_page(struct zone *zone)",
                             "unsigned long flags;", "/* acquire teh lock */", "/* acquire the lock */", CAROL)),
        "replies": [],
        "rules": [],
    },
    {
        "root": ("20230612143000.6006-1-frank@example.com", "[PATCH] mm/slub: drop unused variable", FRANK,
                 "2023-06-12T14:30:00+00:00",
                 small_patch("Unused since the last cleanup.", "mm/slub.c", "static int calculate_order(unsigned int size)",
                             "unsigned int order;", "int unused = 0;", "", FRANK)),
        "replies": [],
        "rules": [],
    },
    {
        "root": ("20230720090000.7007-1-pat@example.com", "[PATCH] mm/shmem: take info->lock around swap accounting", PAT,
                 "2023-07-20T09:00:00+00:00",
                 small_patch("Serialize swapped accounting.", "mm/shmem.c", "static void shmem_recalc_inode(struct inode *inode)",
                             "struct shmem_inode_info *info = SHMEM_I(inode);", "info->swapped -= freed;", "spin_lock(&info->lock); info->swapped -= freed;", PAT)),
        "replies": [
            ("a1b2c3d4-7@kernel.example", ALICE, "2023-07-20T13:00:00+00:00",
             "shmem_recalc_inode() ends up in a path that takes a mutex while you\n"
             "hold info->lock, which is a spinlock. You cannot sleep there.\n"),
            ("b0b-79@example.org", BOB, "2023-07-20T15:25:00+00:00",
             "Same for the kmalloc(GFP_KERNEL) further down, it may sleep.\n"),
            ("dan-71@example.net", DAN, "2023-07-21T10:00:00+00:00",
             "Yes. Under a spinlock only GFP_ATOMIC or GFP_NOWAIT, and no mutexes.\n"),
        ],
        "rules": [
            ("Never call functions that may sleep, such as mutex_lock() or GFP_KERNEL allocations, while holding "
             "a spinlock or otherwise in atomic context.",
             ["a1b2c3d4-7@kernel.example", "b0b-79@example.org", "dan-71@example.net"]),
        ],
    },
    {
        "root": ("20230830110000.8008-1-erin@example.org", "[PATCH] memcg: flush stats under rcu_read_lock", ERIN,
                 "2023-08-30T11:00:00+00:00",
                 small_patch("Flush before reading.", "mm/memcontrol.c", "static unsigned long memcg_page_state_local(struct mem_cgroup *memcg)",
                             "long x;", "x = READ_ONCE(memcg->vmstats->state[idx]);", "cgroup_rstat_flush(memcg->css.cgroup); x = READ_ONCE(memcg->vmstats->state[idx]);", ERIN)),
        "replies": [
            ("frank-81@example.com", FRANK, "2023-08-30T17:30:00+00:00",
             "cgroup_rstat_flush() can sleep, so it cannot be called from inside\n"
             "rcu_read_lock().\n"),
            ("b0b-80@example.org", BOB, "2023-08-31T08:45:00+00:00",
             "Nit: the subject wants 'mm: memcg:' rather than a bare 'memcg:'.\n"),
        ],
        "rules": [
            ("Do not call functions that can sleep inside an RCU read-side critical section.", ["frank-81@example.com"]),
            ("Use the 'mm/<file>:' or 'mm: <area>:' prefix in memory-management patch subjects.", ["b0b-80@example.org"]),
        ],
    },
    {
        "root": ("20230915100000.9009-1-kim@example.net", "[PATCH] mm/damon: add a region merge helper", KIM,
                 "2023-09-15T10:00:00+00:00",
                 small_patch("Helper for merging adjacent regions.", "mm/damon/core.c", "static int damon_merge_two(struct damon_target *t)",
                             "struct damon_region *r;", "r = damon_new_region(a, b);", "r = damon_new_region(a, b); if (!r) return -ENOMEM;", KIM)),
        "replies": [
            ("a1b2c3d4-9@kernel.example", ALICE, "2023-09-15T18:00:00+00:00",
             "On allocation failure you return without freeing what the earlier\n"
             "iterations allocated. Unwind everything before returning the error.\n"),
            ("b0b-91@example.org", BOB, "2023-09-16T09:10:00+00:00",
             "And the name buffer: check that the string fits before you copy it,\n"
             "the length comes straight from the caller.\n"),
        ],
        "rules": [
            ("On an error path, release every resource acquired earlier in the function before returning; use "
             "goto-based unwinding in reverse order of acquisition.",
             ["a1b2c3d4-9@kernel.example"]),
            ("Before writing into a fixed-size buffer, check that the data fits in the remaining space; never "
             "derive the write length from the input alone.",
             ["b0b-91@example.org"]),
        ],
    },
]

FILTER_VERDICTS = {
    "Use the allocator to allocate memory.": "vague",
    "Fix this in the next version.": "redundant",
    "Do not top-post when replying on the mailing list.": "communication-convention",
}

CONVENTION = {
    "Memory-management patch subjects use the 'mm/<file>:' prefix so they reach the right maintainer.",
    "Use the 'mm/<file>:' or 'mm: <area>:' prefix in memory-management patch subjects.",
    "Do not top-post when replying on the mailing list.",
}

MERGES = {
    "Checks done before taking a lock must be repeated after the lock is acquired.": (
        "Re-check any state that was tested without a lock once the lock is held, before acting on it;",
        "Re-check state that was tested without a lock once the lock is held and before acting on it: "
        "between an unlocked check and the action the object can be freed and its memory reused, so a "
        "reference taken on the strength of the earlier check may point at a different object.",
    ),
    "Use the 'mm/<file>:' or 'mm: <area>:' prefix in memory-management patch subjects.": (
        "Memory-management patch subjects use the 'mm/<file>:' prefix",
        "Memory-management patch subjects use the 'mm/<file>:' or 'mm: <area>:' prefix so they reach "
        "the right maintainers.",
    ),
}

EXPECTED_PROGRESS = [
    # thread_index, extracted, filtered, logic, convention, consolidated_logic, consolidated_convention
    (1, 2, 1, 1, 0, 1, 0),
    (2, 4, 2, 2, 0, 2, 0),
    (3, 6, 3, 2, 1, 2, 1),
    (4, 8, 5, 4, 1, 3, 1),
    (5, 8, 5, 4, 1, 3, 1),
    (6, 8, 5, 4, 1, 3, 1),
    (7, 9, 6, 5, 1, 4, 1),
    (8, 11, 8, 6, 2, 5, 1),
    (9, 13, 10, 8, 2, 7, 1),
]

# ---------------------------------------------------------------- patches under review

ZSWAP_ID = "20201107065332.26992-1-sam@example.com"
GATE_ID = "20240312101010.4242-1-lee@example.com"
DAMON_BUG_ID = "20220401090000.1111-1-kim@example.net"
STRBUF_BUG_ID = "20230602110000.2222-1-lee@example.com"
ZSWAP_FIX_ID = "20250109003000.3333-1-yuri@example.org"
DAMON_FIX_ID = "20220520120000.4444-1-kim@example.net"
STRBUF_FIX_ID = "20230710150000.5555-1-erin@example.org"

PATCHES = {
    ZSWAP_ID: dict(
        subject="[PATCH] mm/zswap: move to use crypto_acomp API for hardware acceleration",
        author=SAM, date="2020-11-07T06:53:32+00:00", path="mm/zswap.c", old=ZSWAP_TREE, new=ZSWAP_BUGGY,
        message="Use the asynchronous compression API so zswap can offload compression\n"
                "to hardware accelerators. Each CPU gets an acomp context with its own\n"
                "request and destination buffer, serialized by a per-context mutex.",
    ),
    GATE_ID: dict(
        subject="[PATCH] mm/zswap: pin the pool while shrinking",
        author=LEE, date="2024-03-12T10:10:10+00:00", path="mm/zswap.c", old=ZSWAP_TREE, new=ZSWAP_GATE,
        message="Take a pool reference for the duration of zswap_shrink() so the pool\n"
                "cannot be released underneath the reclaim loop.",
    ),
    ZSWAP_FIX_ID: dict(
        subject="[PATCH] mm: zswap: fix use-after-free of per-CPU acomp_ctx on CPU hotunplug",
        author=YURI, date="2025-01-09T00:30:00+00:00", path="mm/zswap.c", old=ZSWAP_BUGGY, new=ZSWAP_FIXED,
        message="zswap_frontswap_store() gets the per-CPU acomp_ctx with raw_cpu_ptr() and\n"
                "then takes its mutex. If the task migrates in between and the original\n"
                "CPU goes offline, zswap_cpu_comp_dead() frees the request and the\n"
                "store keeps using freed memory.\n\n"
                "Hold the context mutex while tearing it down, clear acomp_ctx->req, and\n"
                "retry in the store path when the context it locked has been torn down.",
    ),
    DAMON_BUG_ID: dict(
        subject="[PATCH] mm/damon/core: split regions into evenly sized pieces",
        author=KIM, date="2022-04-01T09:00:00+00:00", path="mm/damon/core.c", old=DAMON_TREE, new=DAMON_BUGGY,
        message="Add damon_split_regions_of() to split every region of a target into\n"
                "nr_subs pieces of equal size.",
    ),
    DAMON_FIX_ID: dict(
        subject="[PATCH] mm/damon/core: fix memory leak on region split failure",
        author=KIM, date="2022-05-20T12:00:00+00:00", path="mm/damon/core.c", old=DAMON_BUGGY, new=DAMON_FIXED,
        message="When damon_new_region() fails in damon_split_regions_of(), the function\n"
                "returns -ENOMEM without freeing the pieces array or the regions that\n"
                "were already allocated. Free both on the error path.",
    ),
    STRBUF_BUG_ID: dict(
        subject="[PATCH] lib/strbuf: add strbuf_append_hex()",
        author=LEE, date="2023-06-02T11:00:00+00:00", path="lib/strbuf.c", old=STRBUF_TREE, new=STRBUF_BUGGY,
        message="Add a helper that appends binary data to a strbuf as hex digits.",
    ),
    STRBUF_FIX_ID: dict(
        subject="[PATCH] lib/strbuf: fix buffer overflow in strbuf_append_hex()",
        author=ERIN, date="2023-07-10T15:00:00+00:00", path="lib/strbuf.c", old=STRBUF_BUGGY, new=STRBUF_FIXED,
        message="strbuf_append_hex() writes two characters per input byte without\n"
                "checking the space left in the buffer, so a long input overruns\n"
                "sb->buf. Return -EOVERFLOW when the hex form does not fit.",
    ),
}

PAIRS = [
    (ZSWAP_ID, ZSWAP_FIX_ID, "race"),
    (DAMON_BUG_ID, DAMON_FIX_ID, "memory-leak"),
    (STRBUF_BUG_ID, STRBUF_FIX_ID, "buffer-overflow"),
]

# ---------------------------------------------------------------- scripted model answers

SUMMARIES = {
    ZSWAP_ID: ("Switches zswap_frontswap_store() from the synchronous crypto_comp API to crypto_acomp. "
               "The store path now takes the per-CPU acomp_ctx with raw_cpu_ptr(), locks its mutex and "
               "compresses into acomp_ctx->dstmem.",
               ["zswap_frontswap_store", "raw_cpu_ptr", "crypto_acomp_ctx", "mutex_lock"]),
    GATE_ID: ("Makes zswap_shrink() hold a pool reference while reclaiming entries.",
              ["zswap_shrink", "kref_get_unless_zero", "zswap_pool_put"]),
    DAMON_BUG_ID: ("Adds damon_split_regions_of(), which splits each region of a target into equal pieces "
                   "using a temporary array of new regions.",
                   ["damon_split_regions_of", "damon_new_region", "kmalloc_array"]),
    STRBUF_BUG_ID: ("Adds strbuf_append_hex(), appending two hex digits per input byte to a strbuf.",
                    ["strbuf_append_hex", "hex_asc_hi", "hex_asc_lo"]),
}

RANK_KEYWORDS = {
    ZSWAP_ID: ["lock", "cpu", "migrat", "preempt", "free"],
    GATE_ID: ["lock", "freed", "reference", "free"],
    DAMON_BUG_ID: ["error path", "release", "free", "alloc"],
    STRBUF_BUG_ID: ["buffer", "fits", "write", "length"],
}

# Canned issues per patch. "cites" holds rule-content prefixes resolved to
# ids against the ranked list in the prompt; "excerpt" holds a pair of
# substrings marking the first and last patch line to quote.
ISSUES = {
    ZSWAP_ID: [
        dict(
            title="Race condition when accessing per-cpu data in preemptible context",
            description=(
                "zswap_frontswap_store() fetches acomp_ctx with raw_cpu_ptr() while preemption is enabled "
                "and only afterwards takes acomp_ctx->mutex. If the task is preempted and migrated between "
                "the two calls, it locks and uses the context of a CPU it no longer runs on; should that CPU "
                "go offline, zswap_cpu_comp_dead() frees the request and buffer still in use. The pointer must "
                "be re-validated after the mutex is held, or the context pinned against teardown. "
                "zswap_frontswap_load() follows the same pattern."
            ),
            excerpt=("acomp_ctx = raw_cpu_ptr(", "dst = acomp_ctx->dstmem;"),
            cites=["Re-check state that was tested without a lock", "A pointer returned by raw_cpu_ptr()"],
            severity="high",
            verdict="hit",
        ),
        dict(
            title="Per-CPU acomp context torn down while a store still uses it",
            description=(
                "zswap_cpu_comp_dead() frees acomp_ctx->req and the acomp transform without taking "
                "acomp_ctx->mutex, so a concurrent zswap_frontswap_store() holding the mutex can be left "
                "with freed objects."
            ),
            excerpt=("mutex_lock(acomp_ctx->mutex);", "mutex_lock(acomp_ctx->mutex);"),
            cites=["In a CPU hotplug teardown callback"],
            severity="high",
            verdict="hit",
        ),
        dict(
            title="Compressed length read after the request may have failed",
            description=(
                "dlen is taken from acomp_ctx->req->dlen even when crypto_wait_req() returned an error."
            ),
            excerpt=("dlen = acomp_ctx->req->dlen;", "dlen = acomp_ctx->req->dlen;"),
            cites=["On an error path, release every resource"],
            severity="low",
            verdict="miss",
        ),
        dict(
            title="Output scatterlist sized larger than the source page",
            description="sg_init_one() describes PAGE_SIZE * 2 bytes of dstmem; the allocation size is not visible here.",
            excerpt=("sg_init_one(&output, dst, PAGE_SIZE * 2);", "sg_init_one(&output, dst, PAGE_SIZE * 2);"),
            cites=["Before writing into a fixed-size buffer"],
            severity="medium",
            verdict="partial",
        ),
    ],
    GATE_ID: [
        dict(
            title="Pool reference taken without re-checking pool state under the lock",
            description="kref_get_unless_zero() succeeds on a pool that is already being destroyed by zswap_pool_destroy().",
            excerpt=("if (!kref_get_unless_zero(&pool->kref))", "if (!kref_get_unless_zero(&pool->kref))"),
            cites=["Re-check state that was tested without a lock"],
            severity="medium",
            verdict="partial",
        ),
        dict(
            title="Shrinker may sleep in zswap_pool_put()",
            description="zswap_pool_put() can end up in a sleeping release path while the shrinker runs under a spinlock.",
            excerpt=("zswap_pool_put(pool);", "zswap_pool_put(pool);"),
            cites=["R0000000000"],
            severity="medium",
            verdict="miss",
        ),
    ],
    DAMON_BUG_ID: [
        dict(
            title="Memory leak of the pieces array and new regions when a split allocation fails",
            description=(
                "If damon_new_region() fails, damon_split_regions_of() returns -ENOMEM directly, leaking the "
                "pieces array from kmalloc_array() and every region allocated in earlier iterations."
            ),
            excerpt=("if (!pieces[i])", "return -ENOMEM;"),
            cites=["On an error path, release every resource"],
            severity="medium",
            verdict="hit",
        ),
        dict(
            title="Regions inserted while iterating with damon_for_each_region_safe",
            description="New pieces are linked after r while the safe iterator already holds next, so they are skipped.",
            excerpt=("damon_for_each_region_safe(r, next, t) {", "damon_for_each_region_safe(r, next, t) {"),
            cites=["Re-check state that was tested without a lock"],
            severity="low",
            verdict="miss",
        ),
        dict(
            title="nr_subs is not validated before kmalloc_array()",
            description="A zero or negative nr_subs gives a zero-sized array and a division by zero when computing sz.",
            excerpt=("pieces = kmalloc_array(nr_subs, sizeof(*pieces), GFP_KERNEL);", "pieces = kmalloc_array(nr_subs, sizeof(*pieces), GFP_KERNEL);"),
            cites=["Before writing into a fixed-size buffer"],
            severity="medium",
            verdict="partial",
        ),
    ],
    STRBUF_BUG_ID: [
        dict(
            title="Buffer overflow when the hex form of the input exceeds the remaining space",
            description=(
                "strbuf_append_hex() writes 2 * len characters plus a NUL into sb->buf without comparing against "
                "strbuf_room(), so a long input writes past the end of the buffer."
            ),
            excerpt=("sb->buf[sb->len++] = hex_asc_hi(data[i]);", "sb->buf[sb->len++] = hex_asc_lo(data[i]);"),
            cites=["Before writing into a fixed-size buffer"],
            severity="high",
            verdict="hit",
        ),
        dict(
            title="Return value does not report the number of bytes written",
            description="Callers cannot tell how much was appended; returning 0 unconditionally hides truncation.",
            excerpt=("return 0;", "return 0;"),
            cites=["On an error path, release every resource"],
            severity="low",
            verdict="miss",
        ),
        dict(
            title="Missing NUL termination guarantee for empty input",
            description="With len == 0 the function still writes sb->buf[sb->len] without checking that size is non-zero.",
            excerpt=("sb->buf[sb->len] = '\\0';", "sb->buf[sb->len] = '\\0';"),
            cites=["Before writing into a fixed-size buffer"],
            severity="low",
            verdict="partial",
        ),
    ],
}

CRITERIA = {
    ZSWAP_FIX_ID: {
        "root_cause": "Does the issue describe a race between zswap compression and CPU hotunplug, where a task "
                      "that migrates after raw_cpu_ptr() uses an acomp_ctx whose request has been freed?",
        "code_location": "Does the issue point at zswap_frontswap_store() or zswap_cpu_comp_dead() in mm/zswap.c?",
        "fixing_strategy": "Does the issue suggest serializing context teardown with acomp_ctx->mutex and "
                           "re-validating the context after locking it?",
        "keyword_overlap": "Does the issue mention per-CPU data, CPU hotplug or offlining, migration, or "
                           "use-after-free?",
    },
    DAMON_FIX_ID: {
        "root_cause": "Does the issue describe memory allocated in damon_split_regions_of() being leaked when "
                      "damon_new_region() fails?",
        "code_location": "Does the issue point at the allocation failure path of damon_split_regions_of() in "
                         "mm/damon/core.c?",
        "fixing_strategy": "Does the issue suggest freeing the pieces array and the already allocated regions "
                           "before returning -ENOMEM?",
        "keyword_overlap": "Does the issue mention a memory leak, the error path, or kmalloc_array/kfree?",
    },
    STRBUF_FIX_ID: {
        "root_cause": "Does the issue describe strbuf_append_hex() writing past the end of sb->buf because the "
                      "remaining space is never checked?",
        "code_location": "Does the issue point at the write loop of strbuf_append_hex() in lib/strbuf.c?",
        "fixing_strategy": "Does the issue suggest rejecting inputs whose hex form does not fit in strbuf_room()?",
        "keyword_overlap": "Does the issue mention a buffer overflow, the buffer size, or strbuf_room()?",
    },
}

# probability of a "Yes" per criterion, by how well an issue covers the bug
VERDICT_PROFILE = {
    "hit": (0.95, 0.9, 0.7, 0.95),
    "partial": (0.35, 0.6, 0.2, 0.6),
    "miss": (0.05, 0.2, 0.05, 0.3),
}

# ground-truth judgments: confidence per criterion (all matched)
GT_CONFIDENCE = {
    ZSWAP_FIX_ID: (100, 100, 100, 100),
    DAMON_FIX_ID: (100, 100, 100, 100),
    STRBUF_FIX_ID: (100, 100, 80, 100),
}
