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
